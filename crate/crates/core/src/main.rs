use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use labelreader::cascade::{load_model, save_model, train_cascade};
use labelreader::features::{read_fvec, FeatureVector};
use labelreader::imaging::{pnm, Rect};
use labelreader::motion::FrameSequence;
use labelreader::pipeline::{
    self, annotate, detections_as_truth, evaluate, load_ground_truth, localize, run_pipeline, synth, GroundTruthSet,
    PipelineConfig, RoiOutcome,
};
use labelreader::readout::speak;
use labelreader::{Error, Result};

#[derive(Parser)]
#[command(name = "labelreader", version, about = "Read text on hand-held objects from camera frames")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Configuration file with `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Dump intermediate masks, layers and regions.
    #[arg(long, global = true)]
    debug: bool,
    /// Where debug output goes.
    #[arg(long, global = true, value_name = "DIR", default_value = "debug")]
    debug_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the region of interest of a frame directory as `x y w h`.
    Roi { frames: PathBuf },
    /// Find text regions in still images.
    Localize {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Detections file (ground-truth format); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full pipeline on a frame directory and speak the result.
    Read {
        frames: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "script.txt")]
        script: PathBuf,
    },
    /// Train a cascade from positive and negative feature files.
    Train {
        #[arg(long)]
        pos: PathBuf,
        #[arg(long)]
        neg: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score detections against ground truth.
    Eval {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Also write a per-image table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Generate the synthetic corpus.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw regions as blue rectangles.
    Annotate {
        image: PathBuf,
        /// Regions file: ground-truth format or bare `x y w h` lines.
        #[arg(long)]
        regions: PathBuf,
        #[arg(long, default_value = "annotated.ppm")]
        out: PathBuf,
    },
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io { path: p.to_path_buf(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Boxes for `image` from a regions file.
fn read_regions(path: &Path, image: &str) -> Result<Vec<Rect>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let name = path.display().to_string();
    if text.lines().any(|l| l.trim_start().starts_with("image")) {
        let set = GroundTruthSet::parse(&text, &name)?;
        let entry = if set.len() == 1 { set.images.values().next() } else { set.images.get(image) };
        let entry = entry.ok_or_else(|| Error::UnknownImage(image.to_string()))?;
        return Ok(entry.rects().collect());
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<u32> = line.split_whitespace().take(4).map(|t| t.parse()).collect::<std::result::Result<_, _>>().map_err(
            |_| Error::Parse { location: format!("{name}:{}", i + 1), message: "expected `x y w h`".into() },
        )?;
        if nums.len() < 4 {
            return Err(Error::Parse { location: format!("{name}:{}", i + 1), message: "expected `x y w h`".into() });
        }
        out.push(Rect::new(nums[0], nums[1], nums[2], nums[3]));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if cli.debug {
        cfg.debug_dir = Some(cli.debug_dir.clone());
    }

    match cli.command {
        Command::Roi { frames } => {
            let seq = FrameSequence::load_dir(&frames)?;
            let roi = pipeline::find_roi(&seq, &cfg)?.ok_or(Error::NoObjectDetected)?;
            println!("{}", roi.bbox);
        }
        Command::Localize { images, model, out } => {
            let model = load_model(&model)?;
            let mut all = GroundTruthSet::default();
            for path in &images {
                let frame = pnm::read_ppm(path)?;
                let dets = localize(&frame, &cfg, &model)?;
                let name = file_name(path);
                let one = detections_as_truth(&name, frame.dims(), &dets);
                all.images.extend(one.images);
            }
            write_or_print(out.as_deref(), &all.format())?;
        }
        Command::Read { frames, model, script } => {
            let model = load_model(&model)?;
            let seq = FrameSequence::load_dir(&frames)?;
            let result = run_pipeline(&seq, &cfg, &model)?;
            match &result.roi {
                RoiOutcome::Detected(r) => log::info!("roi {}", r.bbox),
                RoiOutcome::FullFrame => log::info!("roi: full frame"),
            }
            for (stage, ms) in &result.timings {
                log::info!("{stage}: {ms:.1} ms");
            }
            result.script.write(&script)?;
            speak(&cfg.tts_adapter()?, &result.script, &script)?;
        }
        Command::Train { pos, neg, out } => {
            let len = cfg.features.vector_len();
            let take = |path: &Path, label: bool| -> Result<Vec<FeatureVector>> {
                let records = read_fvec(path, len)?;
                if let Some(i) = records.iter().position(|r| r.label != label) {
                    return Err(Error::Parameter(format!("{}: record {i} has the wrong label", path.display())));
                }
                Ok(records.into_iter().map(|r| r.features).collect())
            };
            let p = take(&pos, true)?;
            let n = take(&neg, false)?;
            let (model, reports) = train_cascade(&p, &n, &cfg.train)?;
            for (i, r) in reports.iter().enumerate() {
                if let Some(last) = r.last() {
                    eprintln!(
                        "stage {i}: {} learners, detection {:.4}, false positives {:.4}",
                        r.rounds.len(),
                        last.detection,
                        last.false_positive
                    );
                }
            }
            save_model(&out, &model)?;
        }
        Command::Eval { detections, truth, table } => {
            let d = load_ground_truth(&detections)?;
            let t = load_ground_truth(&truth)?;
            let m = evaluate(&d, &t, cfg.eval_iou)?;
            println!("{}", m.summary());
            if let Some(p) = table {
                write_or_print(Some(&p), &m.table())?;
            }
        }
        Command::Synth { seed, out } => {
            let corpus = synth::synth_corpus(&cfg, seed)?;
            synth::write_corpus(&corpus, &out)?;
            eprintln!(
                "{} train, {} test images; {} positive and {} negative records",
                corpus.train.len(),
                corpus.test.len(),
                corpus.positives.len(),
                corpus.negatives.len()
            );
        }
        Command::Annotate { image, regions, out } => {
            let frame = pnm::read_ppm(&image)?;
            let boxes = read_regions(&regions, &file_name(&image))?;
            pnm::write_ppm(&out, &annotate(&frame, &boxes))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
