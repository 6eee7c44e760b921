use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use labelreader::imaging::{pnm, Frame};

const BIN: &str = env!("CARGO_BIN_EXE_labelreader");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Synthetic corpus and a model trained on it, built once per test binary.
fn fixture() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        let d = dir.to_str().unwrap();
        let o = run(&["synth", "--seed", "7", "--out", d]);
        assert!(o.status.success(), "synth: {}", stderr(&o));
        let o = run(&[
            "train",
            "--pos",
            &format!("{d}/pos.fvec"),
            "--neg",
            &format!("{d}/neg.fvec"),
            "--out",
            &format!("{d}/model.txt"),
        ]);
        assert!(o.status.success(), "train: {}", stderr(&o));
        dir
    })
}

fn read_with(config: &str) -> (Output, String) {
    let dir = fixture();
    let work = tempfile::tempdir().unwrap();
    let cfg = work.path().join("lr.conf");
    fs::write(&cfg, config).unwrap();
    let script = work.path().join("script.txt");
    let o = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "read"])
        .arg(dir.join("shaken"))
        .arg("--model")
        .arg(dir.join("model.txt"))
        .arg("--script")
        .arg(&script)
        .output()
        .unwrap();
    let text = fs::read_to_string(&script).unwrap_or_default();
    (o, text)
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["eval", "--bogus"]).status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("localize"));
}

#[test]
fn eval_of_identical_files_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.txt");
    fs::write(&gt, "image a.ppm 100 80\n10 10 30 12 HELLO\n50 40 20 10\nimage b.ppm 64 64\n").unwrap();
    let g = gt.to_str().unwrap();
    let o = run(&["eval", "--detections", g, "--truth", g]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "P=1.000 R=1.000 F=1.000");
}

#[test]
fn missing_model_is_a_processing_error() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("x.ppm");
    pnm::write_ppm(&img, &Frame::from_fn(20, 20, |_, _| [200, 200, 200])).unwrap();
    let o = run(&["localize", img.to_str().unwrap(), "--model", "/nonexistent/model.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn roi_on_static_frames_fails() {
    let dir = tempfile::tempdir().unwrap();
    let f = Frame::from_fn(48, 36, |x, y| [(x * 4) as u8, (y * 6) as u8, 120]);
    for i in 0..10 {
        pnm::write_ppm(dir.path().join(format!("frame_{i:03}.ppm")), &f).unwrap();
    }
    let o = run(&["roi", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no object detected"));
}

#[test]
fn synth_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(&["synth", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    for rel in ["test/truth.txt", "train/truth.txt", "pos.fvec", "neg.fvec", "shaken/frame_000.ppm"] {
        assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap(), "{rel} differs");
    }
    assert_eq!(fs::read(fixture().join("pos.fvec")).unwrap(), fs::read(a.path().join("pos.fvec")).unwrap());
}

#[test]
fn localize_then_eval_round_trip() {
    let dir = fixture();
    let out = tempfile::tempdir().unwrap();
    let dets = out.path().join("dets.txt");
    let images: Vec<PathBuf> = {
        let mut v: Vec<PathBuf> = fs::read_dir(dir.join("test"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "ppm"))
            .collect();
        v.sort();
        v
    };
    let o = Command::new(BIN)
        .arg("localize")
        .args(&images)
        .arg("--model")
        .arg(dir.join("model.txt"))
        .arg("--out")
        .arg(&dets)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let o = Command::new(BIN)
        .arg("eval")
        .arg("--detections")
        .arg(&dets)
        .arg("--truth")
        .arg(dir.join("test/truth.txt"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = String::from_utf8_lossy(&o.stdout);
    let recall: f64 = summary.split_whitespace().nth(1).unwrap()[2..].parse().unwrap();
    assert!(recall >= 0.9, "{summary}");
}

#[test]
fn annotate_draws_blue_boxes() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("in.ppm");
    pnm::write_ppm(&img, &Frame::from_fn(40, 30, |_, _| [255, 255, 255])).unwrap();
    let regions = dir.path().join("r.txt");
    fs::write(&regions, "5 5 20 10\n").unwrap();
    let out = dir.path().join("out.ppm");
    let o = Command::new(BIN)
        .arg("annotate")
        .arg(&img)
        .arg("--regions")
        .arg(&regions)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let f = pnm::read_ppm(&out).unwrap();
    assert_eq!(f.pixel(5, 5), [0, 0, 255]);
    assert_eq!(f.pixel(24, 14), [0, 0, 255]);
    assert_eq!(f.pixel(15, 9), [255, 255, 255]);
    assert_eq!(f.pixel(0, 0), [255, 255, 255]);
}

#[test]
fn failing_ocr_command_skips_regions() {
    let (o, script) = read_with("ocr.command = false {input}\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("OCR failed"), "{}", stderr(&o));
    assert!(script.lines().all(|l| l.starts_with('#')), "{script}");
}

#[test]
fn silent_ocr_command_gives_no_words() {
    let (o, script) = read_with("ocr.command = true {input}\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(script.lines().all(|l| l.starts_with('#')), "{script}");
}

#[test]
fn glyph_ocr_reads_the_shaken_card() {
    let ocr = env!("CARGO_BIN_EXE_glyph-ocr");
    let (o, script) = read_with(&format!("ocr.command = {ocr} {{input}}\n"));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(script.contains("HELLO WORLD"), "{script}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("HELLO WORLD"));
}

#[test]
fn missing_tts_command_is_an_error() {
    let ocr = env!("CARGO_BIN_EXE_glyph-ocr");
    let (o, _) = read_with(&format!("ocr.command = {ocr} {{input}}\ntts.command = /nonexistent/say {{input}}\n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("TTS failed"), "{}", stderr(&o));
}
