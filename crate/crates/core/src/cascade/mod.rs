//! Cascade of boosted decision stumps for text / non-text decisions.

mod io;
mod train;

pub use io::{format_model, load_model, parse_model, save_model};
pub use train::{train_cascade, train_stage, train_stump, RoundStats, StageReport, TrainConfig};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Decision stump. Polarity +1 votes positive for `x >= threshold`,
/// polarity -1 for `x < threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakLearner {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub alpha: f64,
}

impl WeakLearner {
    pub fn predicts_positive(&self, value: f32) -> bool {
        let v = value as f64;
        if self.polarity > 0 {
            v >= self.threshold
        } else {
            v < self.threshold
        }
    }

    pub fn vote(&self, x: &[f32]) -> f64 {
        if self.predicts_positive(x[self.feature]) {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeStage {
    pub learners: Vec<WeakLearner>,
    pub threshold: f64,
}

impl CascadeStage {
    /// Weighted vote, summed in learner order.
    pub fn score(&self, x: &[f32]) -> f64 {
        let mut s = 0.0;
        for l in &self.learners {
            s += l.alpha * l.vote(x);
        }
        s
    }

    pub fn passes(&self, x: &[f32]) -> bool {
        self.score(x) >= self.threshold
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accept,
    /// Index of the first stage that rejected the sample.
    Reject { stage: usize },
}

impl Decision {
    pub fn accepted(&self) -> bool {
        matches!(self, Decision::Accept)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeClassifier {
    pub feature_len: usize,
    pub stages: Vec<CascadeStage>,
}

impl CascadeClassifier {
    pub fn new(feature_len: usize, stages: Vec<CascadeStage>) -> Self {
        CascadeClassifier { feature_len, stages }
    }

    pub fn classify(&self, v: &FeatureVector) -> Result<Decision> {
        self.classify_slice(v.values())
    }

    pub fn classify_slice(&self, x: &[f32]) -> Result<Decision> {
        if x.len() != self.feature_len {
            return Err(Error::Dimension(format!(
                "feature vector has {} entries, classifier expects {}",
                x.len(),
                self.feature_len
            )));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if !stage.passes(x) {
                return Ok(Decision::Reject { stage: i });
            }
        }
        Ok(Decision::Accept)
    }
}

pub fn classify(h: &CascadeClassifier, v: &FeatureVector) -> Result<Decision> {
    h.classify(v)
}
