//! Ground-truth files and localization scoring.
//!
//! ```text
//! image <name> <width> <height>
//! <x> <y> <w> <h> [transcription]
//! ```
//! Detections use the same format, with no transcriptions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::Rect;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthBox {
    pub rect: Rect,
    pub text: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageTruth {
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<TruthBox>,
}

impl ImageTruth {
    pub fn new(width: u32, height: u32) -> Self {
        ImageTruth { width, height, boxes: Vec::new() }
    }

    pub fn rects(&self) -> impl Iterator<Item = Rect> + '_ {
        self.boxes.iter().map(|b| b.rect)
    }
}

/// Boxes per image, keyed by image name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruthSet {
    pub images: BTreeMap<String, ImageTruth>,
}

impl GroundTruthSet {
    pub fn insert(&mut self, name: impl Into<String>, image: ImageTruth) {
        self.images.insert(name.into(), image);
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn total_boxes(&self) -> usize {
        self.images.values().map(|i| i.boxes.len()).sum()
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        for (name, img) in &self.images {
            let _ = writeln!(s, "image {name} {} {}", img.width, img.height);
            for b in &img.boxes {
                let r = b.rect;
                match &b.text {
                    Some(t) => {
                        let _ = writeln!(s, "{} {} {} {} {t}", r.x, r.y, r.w, r.h);
                    }
                    None => {
                        let _ = writeln!(s, "{} {} {} {}", r.x, r.y, r.w, r.h);
                    }
                }
            }
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.format()).map_err(|e| Error::io(path, e))
    }

    /// Parses the text format. Boxes reaching outside their image are clamped
    /// with a warning; boxes left empty by clamping are dropped.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut set = GroundTruthSet::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let loc = || format!("{name}:{}", i + 1);
            let mut toks = line.split_whitespace();
            if line.starts_with("image ") || line == "image" {
                toks.next();
                let img = toks.next().ok_or_else(|| Error::parse(loc(), "missing image name"))?;
                let w: u32 = parse_tok(toks.next(), "width", &loc)?;
                let h: u32 = parse_tok(toks.next(), "height", &loc)?;
                if toks.next().is_some() {
                    return Err(Error::parse(loc(), "trailing tokens after image header"));
                }
                if w == 0 || h == 0 {
                    return Err(Error::parse(loc(), "image dimensions must be positive"));
                }
                if set.images.contains_key(img) {
                    return Err(Error::parse(loc(), format!("duplicate image {img:?}")));
                }
                set.images.insert(img.to_string(), ImageTruth::new(w, h));
                current = Some(img.to_string());
                continue;
            }
            let img_name = current.as_ref().ok_or_else(|| Error::parse(loc(), "box before any image line"))?;
            let x: i64 = parse_tok(toks.next(), "x", &loc)?;
            let y: i64 = parse_tok(toks.next(), "y", &loc)?;
            let w: i64 = parse_tok(toks.next(), "w", &loc)?;
            let h: i64 = parse_tok(toks.next(), "h", &loc)?;
            if w <= 0 || h <= 0 {
                return Err(Error::parse(loc(), "box width and height must be positive"));
            }
            let rest: Vec<&str> = toks.collect();
            let text = (!rest.is_empty()).then(|| rest.join(" "));
            let img = set.images.get_mut(img_name).expect("current image exists");
            let (iw, ih) = (img.width as i64, img.height as i64);
            let (x0, y0) = (x.clamp(0, iw), y.clamp(0, ih));
            let (x1, y1) = ((x + w).clamp(0, iw), (y + h).clamp(0, ih));
            if (x0, y0, x1, y1) != (x, y, x + w, y + h) {
                log::warn!("{}: box {x} {y} {w} {h} exceeds {iw}x{ih}, clamped", loc());
            }
            if x1 <= x0 || y1 <= y0 {
                log::warn!("{}: box lies outside the image, dropped", loc());
                continue;
            }
            let rect = Rect::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32);
            img.boxes.push(TruthBox { rect, text });
        }
        Ok(set)
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, what: &str, loc: &dyn Fn() -> String) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(loc(), format!("missing {what}")))?;
    tok.parse().map_err(|_| Error::parse(loc(), format!("bad {what} {tok:?}")))
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruthSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GroundTruthSet::parse(&text, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageScore {
    pub name: String,
    pub matches: usize,
    pub detected: usize,
    pub truth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub per_image: Vec<ImageScore>,
}

/// `num / den`, or 1 when both sides are empty and 0 when only this side is.
fn ratio(num: usize, den: usize, other: usize) -> f64 {
    match (den, other) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => num as f64 / den as f64,
    }
}

impl Metrics {
    fn from_scores(per_image: Vec<ImageScore>) -> Self {
        let m: usize = per_image.iter().map(|s| s.matches).sum();
        let d: usize = per_image.iter().map(|s| s.detected).sum();
        let t: usize = per_image.iter().map(|s| s.truth).sum();
        let precision = ratio(m, d, t);
        let recall = ratio(m, t, d);
        let f_measure = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Metrics { precision, recall, f_measure, per_image }
    }

    pub fn summary(&self) -> String {
        format!("P={:.3} R={:.3} F={:.3}", self.precision, self.recall, self.f_measure)
    }

    pub fn table(&self) -> String {
        let mut s = String::from("image matches detected truth precision recall\n");
        for r in &self.per_image {
            let _ = writeln!(
                s,
                "{} {} {} {} {:.3} {:.3}",
                r.name,
                r.matches,
                r.detected,
                r.truth,
                ratio(r.matches, r.detected, r.truth),
                ratio(r.matches, r.truth, r.detected)
            );
        }
        s
    }
}

/// Greedy one-to-one matching in descending IoU order; pairs below
/// `threshold` never match. Returns `(detected index, truth index)` pairs.
pub fn match_boxes(detected: &[Rect], truth: &[Rect], threshold: f64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, d) in detected.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let iou = d.iou(t);
            if iou >= threshold {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_d = vec![false; detected.len()];
    let mut used_t = vec![false; truth.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_d[i] && !used_t[j] {
            used_d[i] = true;
            used_t[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Micro-averaged precision and recall. Images present in `truth` but not in
/// `detected` count as having no detections.
pub fn evaluate(detected: &GroundTruthSet, truth: &GroundTruthSet, threshold: f64) -> Result<Metrics> {
    if let Some(name) = detected.images.keys().find(|k| !truth.images.contains_key(*k)) {
        return Err(Error::UnknownImage(name.clone()));
    }
    let empty = ImageTruth::new(1, 1);
    let per_image = truth
        .images
        .iter()
        .map(|(name, t)| {
            let d = detected.images.get(name).unwrap_or(&empty);
            let dr: Vec<Rect> = d.rects().collect();
            let tr: Vec<Rect> = t.rects().collect();
            ImageScore {
                name: name.clone(),
                matches: match_boxes(&dr, &tr, threshold).len(),
                detected: dr.len(),
                truth: tr.len(),
            }
        })
        .collect();
    Ok(Metrics::from_scores(per_image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(rects: &[Rect]) -> GroundTruthSet {
        let mut s = GroundTruthSet::default();
        let mut img = ImageTruth::new(100, 100);
        img.boxes = rects.iter().map(|&rect| TruthBox { rect, text: None }).collect();
        s.insert("a", img);
        s
    }

    #[test]
    fn parse_round_trip() {
        assert!(GroundTruthSet::parse("", "t").unwrap().is_empty());
        let text = "image a.ppm 320 240\n10 20 30 15 HELLO WORLD\n1 2 3 4\n";
        let set = GroundTruthSet::parse(text, "t").unwrap();
        assert_eq!(set.images["a.ppm"].boxes[0].text.as_deref(), Some("HELLO WORLD"));
        assert_eq!(set.format(), text);
        assert_eq!(GroundTruthSet::parse(&set.format(), "t").unwrap(), set);
    }

    #[test]
    fn out_of_bounds_boxes_are_clamped() {
        let set = GroundTruthSet::parse("image a 100 50\n-5 40 20 20\n200 0 5 5\n", "t").unwrap();
        assert_eq!(set.images["a"].boxes.len(), 1);
        assert_eq!(set.images["a"].boxes[0].rect, Rect::new(0, 40, 15, 10));
    }

    #[test]
    fn malformed_lines_name_the_line() {
        let err = GroundTruthSet::parse("image a 10 10\n1 2 x 4\n", "gt.txt").unwrap_err();
        assert!(err.to_string().contains("gt.txt:2"), "{err}");
        assert!(GroundTruthSet::parse("1 2 3 4\n", "t").is_err());
        assert!(GroundTruthSet::parse("image a 10 10\nimage a 10 10\n", "t").is_err());
    }

    #[test]
    fn metric_examples() {
        let t = single(&[Rect::new(0, 0, 10, 10)]);
        assert_eq!(evaluate(&t, &t, 0.5).unwrap().summary(), "P=1.000 R=1.000 F=1.000");
        let far = single(&[Rect::new(50, 50, 10, 10)]);
        let m = evaluate(&far, &t, 0.5).unwrap();
        assert_eq!((m.precision, m.recall, m.f_measure), (0.0, 0.0, 0.0));
        let half = single(&[Rect::new(0, 0, 10, 5)]);
        assert_eq!(evaluate(&half, &t, 0.5).unwrap().recall, 1.0);
        let none = single(&[]);
        assert_eq!(evaluate(&none, &t, 0.5).unwrap().precision, 0.0);
    }

    #[test]
    fn unknown_detection_key_is_an_error() {
        let mut d = single(&[]);
        d.insert("zzz", ImageTruth::new(5, 5));
        assert!(matches!(evaluate(&d, &single(&[]), 0.5), Err(Error::UnknownImage(n)) if n == "zzz"));
    }

    fn arb_rects() -> impl Strategy<Value = Vec<Rect>> {
        proptest::collection::vec((0u32..80, 0u32..80, 1u32..20, 1u32..20), 0..6)
            .prop_map(|v| v.into_iter().map(|(x, y, w, h)| Rect::new(x, y, w, h)).collect())
    }

    proptest! {
        #[test]
        fn swapping_sides_swaps_precision_and_recall(d in arb_rects(), t in arb_rects()) {
            let (ds, ts) = (single(&d), single(&t));
            let a = evaluate(&ds, &ts, 0.5).unwrap();
            let b = evaluate(&ts, &ds, 0.5).unwrap();
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert!((0.0..=1.0).contains(&a.f_measure));
        }
    }
}
