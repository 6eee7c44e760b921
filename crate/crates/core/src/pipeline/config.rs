//! Flat `key = value` configuration.
//!
//! Blank lines and `#` comments are ignored. Every key must be known; the
//! defaults come from the owning modules.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::cascade::TrainConfig;
use crate::error::{Error, Result};
use crate::features::{BlockPattern, FeatureParams};
use crate::layout::LayoutParams;
use crate::motion::{MogParams, RoiParams};
use crate::readout::{OcrAdapter, Prosody, TtsAdapter};

/// Synthetic corpus settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub width: u32,
    pub height: u32,
    pub train_images: usize,
    pub test_images: usize,
    /// Frames in the shaken-card sequence.
    pub frames: usize,
    /// Largest jitter of the shaken card, in pixels.
    pub jitter: u32,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { width: 320, height: 240, train_images: 120, test_images: 50, frames: 30, jitter: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub mog: MogParams,
    pub roi: RoiParams,
    pub layout: LayoutParams,
    pub features: FeatureParams,
    pub train: TrainConfig,
    pub ocr_command: String,
    pub ocr_timeout_s: f64,
    pub tts_command: String,
    pub prosody: Prosody,
    /// Intermediate images and region lists are written here when set.
    pub debug_dir: Option<PathBuf>,
    pub eval_iou: f64,
    pub synth: SynthParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mog: MogParams::default(),
            roi: RoiParams::default(),
            layout: LayoutParams::default(),
            features: FeatureParams::default(),
            train: TrainConfig::default(),
            ocr_command: "tesseract {input} stdout".to_string(),
            ocr_timeout_s: 30.0,
            tts_command: "null".to_string(),
            prosody: Prosody::default(),
            debug_dir: None,
            eval_iou: 0.5,
            synth: SynthParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Defaults overridden by the assignments in `text`.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let loc = format!("{name}:{}", i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(&loc, format!("expected `key = value`, got {line:?}")))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Parameter(m) => Error::parse(&loc, m),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assigns one key. Values are checked for syntax only; call
    /// [`PipelineConfig::validate`] for ranges.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Parameter(format!("{key}: cannot parse {v:?}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Parameter(format!("{key}: expected true or false, got {v:?}"))),
            }
        }
        let v = value;
        match key {
            "mog.k" => self.mog.k = num(key, v)?,
            "mog.alpha" => self.mog.alpha = num(key, v)?,
            "mog.lambda" => self.mog.lambda = num(key, v)?,
            "mog.background_fraction" => self.mog.background_fraction = num(key, v)?,
            "mog.initial_variance" => self.mog.initial_variance = num(key, v)?,
            "mog.variance_floor" => self.mog.variance_floor = num(key, v)?,
            "roi.persistence" => self.roi.persistence = num(key, v)?,
            "roi.margin" => self.roi.margin_fraction = num(key, v)?,
            "layout.max_layers" => self.layout.max_layers = num(key, v)?,
            "layout.h_min" => self.layout.h_min = num(key, v)?,
            "layout.h_max_fraction" => self.layout.h_max_fraction = num(key, v)?,
            "layout.aspect_min" => self.layout.aspect_min = num(key, v)?,
            "layout.aspect_max" => self.layout.aspect_max = num(key, v)?,
            "layout.fill_min" => self.layout.fill_min = num(key, v)?,
            "layout.fill_max" => self.layout.fill_max = num(key, v)?,
            "layout.min_overlap" => self.layout.min_overlap = num(key, v)?,
            "layout.max_gap_ratio" => self.layout.max_gap_ratio = num(key, v)?,
            "layout.max_height_ratio" => self.layout.max_height_ratio = num(key, v)?,
            "layout.min_members" => self.layout.min_members = num(key, v)?,
            "layout.min_score" => self.layout.min_score = num(key, v)?,
            "canny.low" => self.features.canny.low = num(key, v)?,
            "canny.high" => self.features.canny.high = num(key, v)?,
            "canny.sigma" => self.features.canny.sigma = num(key, v)?,
            "features.patch_height" => self.features.patch_height = num(key, v)?,
            "features.min_width" => self.features.min_width = num(key, v)?,
            "features.max_width" => self.features.max_width = num(key, v)?,
            "features.orientation_bins" => self.features.orientation_bins = num(key, v)?,
            "features.density_window" => self.features.density_window = num(key, v)?,
            "features.patterns" => self.features.patterns = BlockPattern::parse_list(v)?,
            "cascade.d_min" => self.train.d_min = num(key, v)?,
            "cascade.f_max" => self.train.f_max = num(key, v)?,
            "cascade.f_global" => self.train.f_global = num(key, v)?,
            "cascade.max_stages" => self.train.max_stages = num(key, v)?,
            "cascade.max_learners" => self.train.max_learners = num(key, v)?,
            "ocr.command" => self.ocr_command = v.to_string(),
            "ocr.timeout_s" => self.ocr_timeout_s = num(key, v)?,
            "tts.command" => self.tts_command = v.to_string(),
            "speech.rate" => self.prosody.rate = num(key, v)?,
            "speech.volume" => self.prosody.volume = num(key, v)?,
            "speech.tone" => self.prosody.tone = num(key, v)?,
            "debug.dir" => self.debug_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "debug.enabled" => {
                if flag(key, v)? && self.debug_dir.is_none() {
                    self.debug_dir = Some(PathBuf::from("debug"));
                }
            }
            "eval.iou" => self.eval_iou = num(key, v)?,
            "synth.width" => self.synth.width = num(key, v)?,
            "synth.height" => self.synth.height = num(key, v)?,
            "synth.train_images" => self.synth.train_images = num(key, v)?,
            "synth.test_images" => self.synth.test_images = num(key, v)?,
            "synth.frames" => self.synth.frames = num(key, v)?,
            "synth.jitter" => self.synth.jitter = num(key, v)?,
            _ => return Err(Error::Parameter(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.mog.validate()?;
        self.roi.validate()?;
        self.layout.validate()?;
        self.features.validate()?;
        self.train.validate()?;
        self.prosody.validate()?;
        self.ocr_adapter()?;
        self.tts_adapter()?;
        if !(self.eval_iou > 0.0 && self.eval_iou <= 1.0) {
            return Err(Error::Parameter("eval.iou must be in (0,1]".into()));
        }
        let s = &self.synth;
        if s.width < 160 || s.height < 120 {
            return Err(Error::Parameter("synth images must be at least 160x120".into()));
        }
        if s.frames < 2 || s.jitter * 4 >= s.height {
            return Err(Error::Parameter("synth.frames must be >= 2 and synth.jitter small against the height".into()));
        }
        Ok(())
    }

    pub fn ocr_adapter(&self) -> Result<OcrAdapter> {
        if !(self.ocr_timeout_s > 0.0 && self.ocr_timeout_s.is_finite()) {
            return Err(Error::Parameter("ocr.timeout_s must be positive".into()));
        }
        OcrAdapter::new(self.ocr_command.clone(), Duration::from_secs_f64(self.ocr_timeout_s))
    }

    pub fn tts_adapter(&self) -> Result<TtsAdapter> {
        TtsAdapter::from_config(&self.tts_command)
    }
}
