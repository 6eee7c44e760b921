//! Deterministic synthetic corpus: still images with word ground truth,
//! a shaken-card frame sequence, and labeled feature records.
//!
//! Colors sit at the centers of the 4-bit quantization bins and the pixel
//! noise never leaves a bin, so each painted color maps to exactly one color
//! layer. Each scene uses at most six colors.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{PipelineConfig, SynthParams};
use super::eval::{GroundTruthSet, ImageTruth, TruthBox};
use super::font;
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureParams, LabeledVector};
use crate::imaging::{luminance, pnm, to_grayscale, Frame, Rect};
use crate::layout::{candidate_regions, LayoutParams};

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const SHAKEN_STREAM: u64 = 3;
const PATCH_STREAM: u64 = 4;

/// Text rendered on the shaken card.
pub const SHAKEN_TEXT: &str = "HELLO WORLD";
const NOISE: i32 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthImage {
    pub name: String,
    pub frame: Frame,
    /// Tight ink box and text of every rendered word.
    pub words: Vec<(Rect, String)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShakenSequence {
    pub frames: Vec<Frame>,
    pub text: String,
    /// Card position in every frame.
    pub cards: Vec<Rect>,
    /// Ink box of the text in the last frame.
    pub text_box: Rect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub train: Vec<SynthImage>,
    pub test: Vec<SynthImage>,
    pub shaken: ShakenSequence,
    pub positives: Vec<LabeledVector>,
    pub negatives: Vec<LabeledVector>,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn palette_color(rng: &mut impl Rng) -> [u8; 3] {
    [0, 1, 2].map(|_| rng.random_range(0u8..16) << 4 | 8)
}

fn contrast(a: [u8; 3], b: [u8; 3]) -> i32 {
    (luminance(a) as i32 - luminance(b) as i32).abs()
}

/// A palette color whose luminance differs from every color in `avoid` by at
/// least `min_contrast`.
fn contrasting_color(rng: &mut impl Rng, avoid: &[[u8; 3]], min_contrast: i32) -> [u8; 3] {
    loop {
        let c = palette_color(rng);
        if avoid.iter().all(|&a| contrast(a, c) >= min_contrast) {
            return c;
        }
    }
}

/// Canvas that records paint operations; noise is added once at the end.
struct Canvas {
    w: u32,
    h: u32,
    px: Vec<[u8; 3]>,
}

impl Canvas {
    fn new(w: u32, h: u32, c: [u8; 3]) -> Self {
        Canvas { w, h, px: vec![c; (w * h) as usize] }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as u32) < self.w && (y as u32) < self.h {
            self.px[(y as u32 * self.w + x as u32) as usize] = c;
        }
    }

    fn fill_rect(&mut self, r: Rect, c: [u8; 3]) {
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                self.put(x as i64, y as i64, c);
            }
        }
    }

    fn shape(&mut self, kind: Shape, r: Rect, c: [u8; 3]) {
        let (cx, cy) = (r.x as f64 + r.w as f64 / 2.0, r.y as f64 + r.h as f64 / 2.0);
        let rad = r.w.min(r.h) as f64 / 2.0;
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let d = (dx * dx + dy * dy).sqrt();
                let inside = match kind {
                    Shape::Disc => d <= rad,
                    Shape::Ring => d <= rad && d >= rad * 0.6,
                    Shape::Square => true,
                    Shape::Frame => {
                        let t = (r.w.min(r.h) / 5).max(2);
                        x < r.x + t || y < r.y + t || x + t >= r.right() || y + t >= r.bottom()
                    }
                    Shape::Triangle => {
                        let fy = (y - r.y) as f64 + 0.5;
                        dx.abs() <= fy * r.w as f64 / (2.0 * r.h as f64)
                    }
                };
                if inside {
                    self.put(x as i64, y as i64, c);
                }
            }
        }
    }

    fn text(&mut self, text: &str, scale: u32, x0: u32, y0: u32, c: [u8; 3]) {
        let mut pts = Vec::new();
        font::render(text, scale, x0, y0, |x, y| pts.push((x, y)));
        for (x, y) in pts {
            self.put(x as i64, y as i64, c);
        }
    }

    fn finish(self, rng: &mut impl Rng) -> Frame {
        let (w, h) = (self.w, self.h);
        let mut data = Vec::with_capacity(self.px.len() * 3);
        for p in self.px {
            for v in p {
                data.push((v as i32 + rng.random_range(-NOISE..=NOISE)).clamp(0, 255) as u8);
            }
        }
        Frame::new(w, h, data).expect("canvas size matches")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Disc,
    Ring,
    Square,
    Frame,
    Triangle,
}

const SHAPES: [Shape; 5] = [Shape::Disc, Shape::Ring, Shape::Square, Shape::Frame, Shape::Triangle];

/// Flat, striped or checkered background using one or two colors.
fn background(rng: &mut impl Rng, w: u32, h: u32) -> (Canvas, Vec<[u8; 3]>) {
    let a = palette_color(rng);
    let kind = rng.random_range(0..3);
    if kind == 0 {
        return (Canvas::new(w, h, a), vec![a]);
    }
    // second texture color stays close in luminance so text contrasts with both
    let b = loop {
        let b = palette_color(rng);
        if b != a && contrast(a, b) <= 40 {
            break b;
        }
    };
    let period = rng.random_range(6..20u32);
    let horizontal = rng.random_bool(0.5);
    let mut c = Canvas::new(w, h, a);
    for y in 0..h {
        for x in 0..w {
            let on = match kind {
                1 if horizontal => (y / period) % 2 == 1,
                1 => (x / period) % 2 == 1,
                _ => (x / period + y / period) % 2 == 1,
            };
            if on {
                c.put(x as i64, y as i64, b);
            }
        }
    }
    (c, vec![a, b])
}

fn random_word(rng: &mut impl Rng, max_len: usize) -> String {
    let chars: Vec<char> = font::charset().collect();
    let len = rng.random_range(3..=max_len.max(3));
    // letters are more common than digits
    (0..len)
        .map(|_| if rng.random_bool(0.85) { chars[rng.random_range(0..26)] } else { chars[rng.random_range(26..36)] })
        .collect()
}

/// Keeps placed objects far enough apart that the layout rules never chain
/// one object to another.
struct Placement {
    reserved: Vec<Rect>,
    w: u32,
    h: u32,
}

impl Placement {
    fn try_place(&mut self, rng: &mut impl Rng, w: u32, h: u32, gap: u32) -> Option<Rect> {
        if w + 4 > self.w || h + 4 > self.h {
            return None;
        }
        for _ in 0..60 {
            let r = Rect::new(rng.random_range(2..=self.w - w - 2), rng.random_range(2..=self.h - h - 2), w, h);
            let zone = Rect::new(r.x.saturating_sub(gap), r.y.saturating_sub(4), w + 2 * gap, h + 8);
            if self.reserved.iter().all(|o| o.intersection(&zone).is_none()) {
                self.reserved.push(zone);
                return Some(r);
            }
        }
        None
    }
}

/// One still scene: background, up to two clutter groups, one to three words.
pub fn render_still(rng: &mut impl Rng, p: &SynthParams, name: impl Into<String>) -> SynthImage {
    let (w, h) = (p.width, p.height);
    let (mut canvas, bg) = background(rng, w, h);
    let mut place = Placement { reserved: Vec::new(), w, h };

    let ink: Vec<[u8; 3]> = {
        let first = contrasting_color(rng, &bg, 70);
        if rng.random_bool(0.3) {
            let second = loop {
                let c = contrasting_color(rng, &bg, 70);
                if c != first {
                    break c;
                }
            };
            vec![first, second]
        } else {
            vec![first]
        }
    };
    let mut words = Vec::new();
    let n_words = rng.random_range(1..=3);
    for _ in 0..n_words {
        for _attempt in 0..8 {
            let scale = rng.random_range(2..=6u32);
            let max_len = ((w - 8) / (font::ADVANCE * scale)).min(8) as usize;
            if max_len < 3 {
                continue;
            }
            let word = random_word(rng, max_len);
            let (tw, th) = font::text_size(&word, scale);
            let gap = 2 * font::ADVANCE * scale + 6;
            if let Some(r) = place.try_place(rng, tw, th, gap) {
                let color = ink[rng.random_range(0..ink.len())];
                canvas.text(&word, scale, r.x, r.y, color);
                let bounds = font::ink_bounds(&word, scale, r.x, r.y).expect("word has ink");
                words.push((bounds, word));
                break;
            }
        }
    }

    let n_clutter = rng.random_range(0..=2);
    for _ in 0..n_clutter {
        let color = contrasting_color(rng, &bg, 50);
        let shape = SHAPES[rng.random_range(0..SHAPES.len())];
        let size = rng.random_range(12..=36u32);
        let count = if rng.random_bool(0.7) { rng.random_range(3..=6u32) } else { 1 };
        let step = size + rng.random_range(size / 4..=size);
        let total = step * (count - 1) + size;
        if let Some(r) = place.try_place(rng, total, size, 2 * size + 6) {
            for i in 0..count {
                canvas.shape(shape, Rect::new(r.x + i * step, r.y, size, size), color);
            }
        }
    }
    let frame = canvas.finish(rng);
    SynthImage { name: name.into(), frame, words }
}

/// Textured static background and a flat card carrying `text`, moved by a
/// random offset within ±`jitter` pixels in every frame.
pub fn shaken_card(rng: &mut impl Rng, p: &SynthParams, text: &str) -> ShakenSequence {
    let (w, h) = (p.width, p.height);
    let j = p.jitter;
    let mut scale = 3;
    while scale > 1 && font::text_size(text, scale).0 + 24 + 2 * j + 8 > w {
        scale -= 1;
    }
    let (tw, th) = font::text_size(text, scale);
    let pad = 12;
    let (cw, ch) = (tw + 2 * pad, th + 2 * pad);
    let base_x = (w - cw) / 2;
    let base_y = (h - ch) / 2;

    let (texture, bg) = loop {
        let (c, colors) = background(rng, w, h);
        if colors.len() == 2 {
            break (c.px, colors);
        }
    };
    let card = contrasting_color(rng, &bg, 60);
    let ink = contrasting_color(rng, &[card], 90);

    let mut frames = Vec::with_capacity(p.frames);
    let mut cards = Vec::with_capacity(p.frames);
    let mut text_box = Rect::new(0, 0, 0, 0);
    for _ in 0..p.frames {
        let dx = rng.random_range(0..=2 * j);
        let dy = rng.random_range(0..=2 * j);
        let r = Rect::new(base_x + dx - j, base_y + dy - j, cw, ch);
        let mut c = Canvas { w, h, px: texture.clone() };
        c.fill_rect(r, card);
        c.text(text, scale, r.x + pad, r.y + pad, ink);
        text_box = font::ink_bounds(text, scale, r.x + pad, r.y + pad).expect("text has ink");
        frames.push(c.finish(rng));
        cards.push(r);
    }
    ShakenSequence { frames, text: text.to_string(), cards, text_box }
}

/// A textured square shaken over a textured background. Returns the frames
/// and the square's position in each.
pub fn shaken_square(seed: u64, width: u32, height: u32, frames: usize, size: u32, jitter: u32) -> (Vec<Frame>, Vec<Rect>) {
    let mut rng = rng_for(seed, SHAKEN_STREAM);
    let (bg, _) = background(&mut rng, width, height);
    let cell = 4;
    let cells = size.div_ceil(cell);
    let texture: Vec<[u8; 3]> = (0..cells * cells).map(|_| palette_color(&mut rng)).collect();
    let cx = rng.random_range(jitter..=width - size - jitter);
    let cy = rng.random_range(jitter..=height - size - jitter);
    let mut out = Vec::with_capacity(frames);
    let mut rects = Vec::with_capacity(frames);
    for _ in 0..frames {
        let r = Rect::new(
            cx + rng.random_range(0..=2 * jitter) - jitter,
            cy + rng.random_range(0..=2 * jitter) - jitter,
            size,
            size,
        );
        let mut c = Canvas { w: width, h: height, px: bg.px.clone() };
        for y in 0..size {
            for x in 0..size {
                c.put((r.x + x) as i64, (r.y + y) as i64, texture[((y / cell) * cells + x / cell) as usize]);
            }
        }
        out.push(c.finish(&mut rng));
        rects.push(r);
    }
    (out, rects)
}

/// Training records from scenes: layout candidates that match a word become
/// positives along with the true word boxes; candidates and random patches
/// that touch no word become negatives.
pub fn training_records(
    images: &[SynthImage],
    layout: &LayoutParams,
    features: &FeatureParams,
    seed: u64,
) -> Result<(Vec<LabeledVector>, Vec<LabeledVector>)> {
    let per_image: Vec<Result<(Vec<LabeledVector>, Vec<LabeledVector>)>> = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let mut rng = rng_for(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15), PATCH_STREAM);
            let gray = to_grayscale(&img.frame);
            let truth: Vec<Rect> = img.words.iter().map(|(r, _)| *r).collect();
            let mut pos_boxes = truth.clone();
            let mut neg_boxes = Vec::new();
            for c in candidate_regions(&img.frame, layout)? {
                let best = truth.iter().map(|t| t.iou(&c.bbox)).fold(0.0, f64::max);
                if best >= 0.5 {
                    pos_boxes.push(c.bbox);
                } else if truth.iter().all(|t| t.intersection(&c.bbox).is_none()) {
                    neg_boxes.push(c.bbox);
                }
            }
            let (w, h) = img.frame.dims();
            let mut tries = 0;
            while neg_boxes.len() < 6 && tries < 200 {
                tries += 1;
                let ph = rng.random_range(14..=44u32).min(h);
                let pw = (ph * rng.random_range(2..=8u32)).min(w);
                let r = Rect::new(rng.random_range(0..=w - pw), rng.random_range(0..=h - ph), pw, ph);
                if truth.iter().all(|t| t.intersection(&r).is_none()) {
                    neg_boxes.push(r);
                }
            }
            let vec_of = |r: &Rect, label| -> Result<LabeledVector> {
                Ok(LabeledVector { label, features: extract_features(&gray.crop(*r)?, features)? })
            };
            let pos = pos_boxes.iter().map(|r| vec_of(r, true)).collect::<Result<Vec<_>>>()?;
            let neg = neg_boxes.iter().map(|r| vec_of(r, false)).collect::<Result<Vec<_>>>()?;
            Ok((pos, neg))
        })
        .collect();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for r in per_image {
        let (p, n) = r?;
        pos.extend(p);
        neg.extend(n);
    }
    Ok((pos, neg))
}

pub fn stills(seed: u64, stream: u64, count: usize, p: &SynthParams, prefix: &str) -> Vec<SynthImage> {
    let mut rng = rng_for(seed, stream);
    (0..count).map(|i| render_still(&mut rng, p, format!("{prefix}_{i:04}.ppm"))).collect()
}

/// Generates the full corpus for `seed`. Train and test scenes come from
/// separate random streams.
pub fn synth_corpus(cfg: &PipelineConfig, seed: u64) -> Result<SynthCorpus> {
    cfg.validate()?;
    let p = &cfg.synth;
    let train = stills(seed, TRAIN_STREAM, p.train_images, p, "train");
    let test = stills(seed, TEST_STREAM, p.test_images, p, "test");
    let shaken = shaken_card(&mut rng_for(seed, SHAKEN_STREAM), p, SHAKEN_TEXT);
    let (positives, negatives) = training_records(&train, &cfg.layout, &cfg.features, seed)?;
    Ok(SynthCorpus { train, test, shaken, positives, negatives })
}

pub fn truth_of(images: &[SynthImage]) -> GroundTruthSet {
    let mut set = GroundTruthSet::default();
    for img in images {
        let (w, h) = img.frame.dims();
        let mut t = ImageTruth::new(w, h);
        t.boxes = img.words.iter().map(|(r, s)| TruthBox { rect: *r, text: Some(s.clone()) }).collect();
        set.insert(img.name.clone(), t);
    }
    set
}

/// Writes the corpus under `dir`:
/// `train/`, `test/` (images plus `truth.txt`), `shaken/` (frames),
/// `pos.fvec` and `neg.fvec`.
pub fn write_corpus(corpus: &SynthCorpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    for (sub, images) in [("train", &corpus.train), ("test", &corpus.test)] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        for img in images {
            pnm::write_ppm(d.join(&img.name), &img.frame)?;
        }
        truth_of(images).save(d.join("truth.txt"))?;
    }
    let d = dir.join("shaken");
    fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    for (i, f) in corpus.shaken.frames.iter().enumerate() {
        pnm::write_ppm(d.join(format!("frame_{i:03}.ppm")), f)?;
    }
    crate::features::write_fvec(dir.join("pos.fvec"), &corpus.positives)?;
    crate::features::write_fvec(dir.join("neg.fvec"), &corpus.negatives)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthParams {
        SynthParams { train_images: 4, test_images: 3, ..SynthParams::default() }
    }

    #[test]
    fn same_seed_same_scenes() {
        let p = small();
        assert_eq!(stills(42, TRAIN_STREAM, 3, &p, "t"), stills(42, TRAIN_STREAM, 3, &p, "t"));
        assert_ne!(stills(42, TRAIN_STREAM, 3, &p, "t"), stills(42, TEST_STREAM, 3, &p, "t"));
    }

    #[test]
    fn words_are_in_bounds_and_separate() {
        let p = small();
        for img in stills(7, TEST_STREAM, 20, &p, "t") {
            assert!(!img.words.is_empty());
            for (i, (a, text)) in img.words.iter().enumerate() {
                assert!(a.right() <= p.width && a.bottom() <= p.height);
                assert!(text.chars().count() >= 3);
                for (b, _) in &img.words[i + 1..] {
                    assert!(a.intersection(b).is_none());
                }
            }
        }
    }

    #[test]
    fn shaken_card_stays_in_frame() {
        let p = small();
        let s = shaken_card(&mut rng_for(3, SHAKEN_STREAM), &p, SHAKEN_TEXT);
        assert_eq!(s.frames.len(), p.frames);
        for c in &s.cards {
            assert!(c.right() <= p.width && c.bottom() <= p.height);
        }
        assert!(s.cards.last().unwrap().contains(&s.text_box));
    }
}
