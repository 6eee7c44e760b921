//! End-to-end orchestration: frames to ROI to text regions to speech script.

pub mod config;
pub mod eval;
pub mod font;
pub mod synth;

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use config::{PipelineConfig, SynthParams};
pub use eval::{evaluate, load_ground_truth, GroundTruthSet, ImageScore, ImageTruth, Metrics, TruthBox};

use crate::cascade::CascadeClassifier;
use crate::error::{Error, Result};
use crate::features::extract_batch;
use crate::imaging::{pnm, to_grayscale, Frame, GrayImage, Rect};
use crate::layout::{candidate_regions, format_regions, reduce_colors, CandidateRegion};
use crate::motion::{aggregate_foreground, extract_roi_with, foreground_masks, FrameSequence, RegionOfInterest};
use crate::readout::{binarize_region, run_ocr, RecognizedText, SpeechScript, TextRegion};

/// A layout candidate the cascade accepted.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    pub bbox: Rect,
    pub layout_score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RoiOutcome {
    Detected(RegionOfInterest),
    /// No persistent motion; the whole last frame was used.
    FullFrame,
}

impl RoiOutcome {
    pub fn bbox(&self, frame_dims: (u32, u32)) -> Rect {
        match self {
            RoiOutcome::Detected(r) => r.bbox,
            RoiOutcome::FullFrame => Rect::new(0, 0, frame_dims.0, frame_dims.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineResult {
    pub roi: RoiOutcome,
    /// Regions in frame coordinates, in reading order.
    pub regions: Vec<TextRegion>,
    pub texts: Vec<RecognizedText>,
    pub script: SpeechScript,
    /// Wall time per stage in milliseconds, in execution order.
    pub timings: Vec<(&'static str, f64)>,
}

fn check_model(cfg: &PipelineConfig, model: &CascadeClassifier) -> Result<()> {
    let expected = cfg.features.vector_len();
    if model.feature_len != expected {
        return Err(Error::Parameter(format!(
            "model expects {} features but the feature settings produce {expected}",
            model.feature_len
        )));
    }
    Ok(())
}

/// Drops accepted regions lying mostly inside a larger accepted region.
fn suppress_nested(mut dets: Vec<Detection>) -> Vec<Detection> {
    dets.sort_by(|a, b| b.bbox.area().cmp(&a.bbox.area()).then(a.bbox.cmp(&b.bbox)));
    let mut kept: Vec<Detection> = Vec::new();
    for d in dets {
        let nested = kept.iter().any(|k| k.bbox.intersection(&d.bbox).is_some_and(|i| 2 * i.area() >= d.bbox.area()));
        if !nested {
            kept.push(d);
        }
    }
    kept.sort_by_key(|d| (d.bbox.y, d.bbox.x, d.bbox.h, d.bbox.w));
    kept
}

/// Layout analysis and cascade classification on one image. Boxes are in
/// the image's coordinates, sorted in reading order.
pub fn localize(frame: &Frame, cfg: &PipelineConfig, model: &CascadeClassifier) -> Result<Vec<Detection>> {
    check_model(cfg, model)?;
    let candidates = candidate_regions(frame, &cfg.layout)?;
    classify_candidates(&to_grayscale(frame), &candidates, cfg, model)
}

fn classify_candidates(
    gray: &GrayImage,
    candidates: &[CandidateRegion],
    cfg: &PipelineConfig,
    model: &CascadeClassifier,
) -> Result<Vec<Detection>> {
    let crops = candidates.iter().map(|c| gray.crop(c.bbox)).collect::<Result<Vec<_>>>()?;
    let vectors = extract_batch(&crops, &cfg.features)?;
    let mut accepted = Vec::new();
    for (c, v) in candidates.iter().zip(&vectors) {
        if model.classify(v)?.accepted() {
            accepted.push(Detection { bbox: c.bbox, layout_score: c.score });
        }
    }
    Ok(suppress_nested(accepted))
}

/// Detections for an image in ground-truth format.
pub fn detections_as_truth(name: &str, dims: (u32, u32), dets: &[Detection]) -> GroundTruthSet {
    let mut set = GroundTruthSet::default();
    let mut img = ImageTruth::new(dims.0, dims.1);
    img.boxes = dets.iter().map(|d| TruthBox { rect: d.bbox, text: None }).collect();
    set.insert(name, img);
    set
}

/// Motion ROI for a sequence, or `None` when nothing moved persistently.
pub fn find_roi(frames: &FrameSequence, cfg: &PipelineConfig) -> Result<Option<RegionOfInterest>> {
    let masks = foreground_masks(frames, cfg.mog)?;
    let map = aggregate_foreground(&masks)?;
    if let Some(dir) = &cfg.debug_dir {
        dump_motion(dir, &masks, &map)?;
    }
    match extract_roi_with(&map, &cfg.roi) {
        Ok(roi) => Ok(Some(roi)),
        Err(Error::NoObjectDetected) => Ok(None),
        Err(e) => Err(e),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn dump_motion(dir: &Path, masks: &[crate::imaging::BinaryMask], map: &crate::motion::ObjectMap) -> Result<()> {
    ensure_dir(dir)?;
    for (i, m) in masks.iter().enumerate() {
        pnm::write_mask(dir.join(format!("foreground_{i:03}.pgm")), m)?;
    }
    let g = GrayImage::from_fn(map.width, map.height, |x, y| (map.get(x, y) * 255.0).round() as u8);
    pnm::write_pgm(dir.join("object_map.pgm"), &g)
}

fn dump_layout(dir: &Path, crop: &Frame, cfg: &PipelineConfig, candidates: &[CandidateRegion]) -> Result<()> {
    ensure_dir(dir)?;
    let layers = reduce_colors(crop, cfg.layout.max_layers)?;
    let indexed = GrayImage::from_fn(crop.width(), crop.height(), |x, y| {
        layers.iter().position(|l| l.mask.get(x, y)).unwrap_or(0) as u8
    });
    pnm::write_pgm(dir.join("layers.pgm"), &indexed)?;
    let path = dir.join("regions.txt");
    fs::write(&path, format_regions(candidates)).map_err(|e| Error::io(&path, e))
}

/// The whole reading pipeline over a frame sequence. Localization runs on
/// the last frame, inside the motion ROI when one is found.
pub fn run_pipeline(frames: &FrameSequence, cfg: &PipelineConfig, model: &CascadeClassifier) -> Result<PipelineResult> {
    cfg.validate()?;
    check_model(cfg, model)?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, f64)>| {
        timings.push((name, clock.elapsed().as_secs_f64() * 1e3));
        clock = Instant::now();
    };

    let roi = match find_roi(frames, cfg)? {
        Some(r) => RoiOutcome::Detected(r),
        None => {
            log::warn!("no object detected; falling back to the full frame");
            RoiOutcome::FullFrame
        }
    };
    lap("roi", &mut timings);

    let last = frames.last();
    let roi_box = roi.bbox(last.dims());
    let crop = last.crop(roi_box)?;
    let candidates = candidate_regions(&crop, &cfg.layout)?;
    if let Some(dir) = &cfg.debug_dir {
        dump_layout(dir, &crop, cfg, &candidates)?;
    }
    lap("layout", &mut timings);

    let detections = classify_candidates(&to_grayscale(&crop), &candidates, cfg, model)?;
    lap("classify", &mut timings);

    let gray = to_grayscale(last);
    let regions: Vec<TextRegion> = detections
        .iter()
        .filter_map(|d| {
            let bbox = d.bbox.translate(roi_box.x, roi_box.y);
            match binarize_region(&gray, bbox) {
                Ok(r) => Some(Ok(r)),
                Err(Error::Degenerate(m)) => {
                    log::warn!("region {bbox} skipped: {m}");
                    None
                }
                Err(e) => Some(Err(e)),
            }
        })
        .collect::<Result<_>>()?;
    lap("binarize", &mut timings);

    let ocr = cfg.ocr_adapter()?;
    let texts: Vec<RecognizedText> = regions
        .par_iter()
        .filter_map(|r| match run_ocr(&ocr, r) {
            Ok(t) => Some(t),
            Err(e) => {
                log::warn!("region {} skipped: {e}", r.bbox);
                None
            }
        })
        .collect();
    lap("ocr", &mut timings);

    let script = SpeechScript::build(&texts, cfg.prosody)?;
    lap("script", &mut timings);
    Ok(PipelineResult { roi, regions, texts, script, timings })
}

/// Draws a `thickness`-pixel outline of `r`, inside its bounds.
pub fn draw_rect(frame: &mut Frame, r: Rect, thickness: u32, rgb: [u8; 3]) {
    let Some(r) = r.intersection(&frame.bounds()) else { return };
    for y in r.y..r.bottom() {
        for x in r.x..r.right() {
            let edge = x < r.x + thickness
                || y < r.y + thickness
                || x + thickness >= r.right()
                || y + thickness >= r.bottom();
            if edge {
                frame.set_pixel(x, y, rgb);
            }
        }
    }
}

/// Marks each box with a 2-pixel blue outline.
pub fn annotate(frame: &Frame, boxes: &[Rect]) -> Frame {
    let mut out = frame.clone();
    for &b in boxes {
        draw_rect(&mut out, b, 2, [0, 0, 255]);
    }
    out
}
