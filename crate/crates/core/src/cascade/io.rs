//! Versioned text model format.
//!
//! ```text
//! cascade v1 <featureLength> <numStages>
//! stage <n> <threshold>
//! <featureIndex> <threshold> <polarity> <alpha>
//! ...
//! ```
//! Reals carry 17 significant digits so a save/load round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CascadeClassifier, CascadeStage, WeakLearner};
use crate::error::{Error, Result};

pub fn format_model(h: &CascadeClassifier) -> String {
    let mut s = format!("cascade v1 {} {}\n", h.feature_len, h.stages.len());
    for (n, stage) in h.stages.iter().enumerate() {
        let _ = writeln!(s, "stage {n} {:.16e}", stage.threshold);
        for l in &stage.learners {
            let _ = writeln!(s, "{} {:.16e} {} {:.16e}", l.feature, l.threshold, l.polarity, l.alpha);
        }
    }
    s
}

fn field<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize, name: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(format!("{name}:{line}"), format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::parse(format!("{name}:{line}"), format!("bad {what} {tok:?}")))
}

pub fn parse_model(text: &str, name: &str) -> Result<CascadeClassifier> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| Error::parse(name, "empty model file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("cascade") || toks.next() != Some("v1") {
        return Err(Error::parse(format!("{name}:{hl}"), "expected header `cascade v1 <len> <stages>`"));
    }
    let feature_len: usize = field(toks.next(), "feature length", hl, name)?;
    let num_stages: usize = field(toks.next(), "stage count", hl, name)?;

    let mut stages: Vec<CascadeStage> = Vec::with_capacity(num_stages);
    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        let first = toks.next().unwrap_or_default();
        if first == "stage" {
            let n: usize = field(toks.next(), "stage index", ln, name)?;
            if n != stages.len() {
                return Err(Error::parse(format!("{name}:{ln}"), format!("expected stage {}", stages.len())));
            }
            let threshold: f64 = field(toks.next(), "stage threshold", ln, name)?;
            stages.push(CascadeStage { learners: Vec::new(), threshold });
            continue;
        }
        let stage = stages
            .last_mut()
            .ok_or_else(|| Error::parse(format!("{name}:{ln}"), "learner before any stage line"))?;
        let feature: usize = field(Some(first), "feature index", ln, name)?;
        let threshold: f64 = field(toks.next(), "learner threshold", ln, name)?;
        let polarity: i8 = field(toks.next(), "polarity", ln, name)?;
        let alpha: f64 = field(toks.next(), "alpha", ln, name)?;
        if feature >= feature_len {
            return Err(Error::parse(format!("{name}:{ln}"), format!("feature index {feature} >= {feature_len}")));
        }
        if polarity != 1 && polarity != -1 {
            return Err(Error::parse(format!("{name}:{ln}"), "polarity must be 1 or -1"));
        }
        if !(alpha > 0.0) {
            return Err(Error::parse(format!("{name}:{ln}"), "alpha must be positive"));
        }
        stage.learners.push(WeakLearner { feature, threshold, polarity, alpha });
    }
    if stages.len() != num_stages {
        return Err(Error::parse(name, format!("header says {num_stages} stages, found {}", stages.len())));
    }
    if let Some(i) = stages.iter().position(|s| s.learners.is_empty()) {
        return Err(Error::parse(name, format!("stage {i} has no learners")));
    }
    Ok(CascadeClassifier { feature_len, stages })
}

pub fn save_model(path: impl AsRef<Path>, h: &CascadeClassifier) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_model(h)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CascadeClassifier> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_model() -> impl Strategy<Value = CascadeClassifier> {
        let learner = (0usize..20, any::<f64>().prop_filter("finite", |v| v.is_finite()), any::<bool>(), 1e-9f64..1e3)
            .prop_map(|(feature, threshold, pos, alpha)| WeakLearner {
                feature,
                threshold,
                polarity: if pos { 1 } else { -1 },
                alpha,
            });
        let stage = (proptest::collection::vec(learner, 1..6), -1e3f64..1e3)
            .prop_map(|(learners, threshold)| CascadeStage { learners, threshold });
        proptest::collection::vec(stage, 0..5).prop_map(|stages| CascadeClassifier { feature_len: 20, stages })
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(h in arb_model()) {
            let back = parse_model(&format_model(&h), "t").unwrap();
            prop_assert_eq!(back, h);
        }
    }

    #[test]
    fn header_format() {
        let h = CascadeClassifier {
            feature_len: 171,
            stages: vec![CascadeStage {
                learners: vec![WeakLearner { feature: 3, threshold: 0.5, polarity: -1, alpha: 1.25 }],
                threshold: -0.75,
            }],
        };
        let text = format_model(&h);
        assert_eq!(
            text,
            "cascade v1 171 1\nstage 0 -7.5000000000000000e-1\n3 5.0000000000000000e-1 -1 1.2500000000000000e0\n"
        );
    }

    #[test]
    fn malformed_models_are_rejected() {
        assert!(parse_model("", "t").is_err());
        assert!(parse_model("cascade v2 3 0\n", "t").is_err());
        assert!(parse_model("cascade v1 3 1\n", "t").is_err());
        assert!(parse_model("cascade v1 3 1\nstage 0 0\n", "t").is_err());
        assert!(parse_model("cascade v1 3 1\nstage 0 0\n5 0 1 1\n", "t").is_err());
        assert!(parse_model("cascade v1 3 1\nstage 0 0\n1 0 2 1\n", "t").is_err());
        assert!(parse_model("cascade v1 3 1\nstage 0 0\n1 0 1 1\n", "t").is_ok());
    }
}
