//! Motion-based region of interest.
//!
//! A per-pixel mixture of Gaussians tracks the static scene. The foreground
//! masks of every frame are averaged into an [`ObjectMap`] (how often each
//! pixel was foreground), which is thresholded to find the shaken object.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{close3x3, connected_components, pnm, BinaryMask, Connectivity, Frame, Rect};

/// Weight given to a component created for an unmatched pixel.
const NEW_COMPONENT_WEIGHT: f64 = 0.05;

/// Ordered frames of one capture, all the same size.
#[derive(Clone, Debug)]
pub struct FrameSequence {
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::Dimension("frame sequence is empty".into()))?;
        let dims = first.dims();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != dims) {
            return Err(Error::Dimension(format!(
                "frame {i} is {}x{}, expected {}x{}",
                f.width(),
                f.height(),
                dims.0,
                dims.1
            )));
        }
        Ok(FrameSequence { frames })
    }

    /// Loads every `.ppm` file in `dir`, ordered by file name.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("ppm")))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Dimension(format!("no .ppm frames in {}", dir.display())));
        }
        let frames = paths.iter().map(pnm::read_ppm).collect::<Result<Vec<_>>>()?;
        FrameSequence::new(frames)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn last(&self) -> &Frame {
        self.frames.last().expect("sequence is non-empty")
    }

    pub fn dims(&self) -> (u32, u32) {
        self.frames[0].dims()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianComponent {
    pub mean: [f64; 3],
    /// Shared by all three channels.
    pub variance: f64,
    pub weight: f64,
}

impl GaussianComponent {
    fn rank(&self) -> f64 {
        self.weight / self.variance.sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MogParams {
    /// Maximum components per pixel.
    pub k: usize,
    /// Learning rate.
    pub alpha: f64,
    /// Match distance in standard deviations.
    pub lambda: f64,
    /// Cumulative weight that the background components account for.
    pub background_fraction: f64,
    pub initial_variance: f64,
    pub variance_floor: f64,
}

impl Default for MogParams {
    fn default() -> Self {
        MogParams {
            k: 3,
            alpha: 0.01,
            lambda: 2.5,
            background_fraction: 0.7,
            initial_variance: 225.0,
            variance_floor: 4.0,
        }
    }
}

impl MogParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.k < 1 || self.k > 255 {
            return bad(format!("mog K must be in 1..=255, got {}", self.k));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("mog learning rate must be in (0,1), got {}", self.alpha));
        }
        if !(self.background_fraction > 0.0 && self.background_fraction <= 1.0) {
            return bad(format!("mog background fraction must be in (0,1], got {}", self.background_fraction));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("mog match threshold must be positive, got {}", self.lambda));
        }
        if !(self.variance_floor > 0.0 && self.initial_variance >= self.variance_floor) {
            return bad(format!(
                "mog variances need 0 < floor <= initial, got floor={} initial={}",
                self.variance_floor, self.initial_variance
            ));
        }
        Ok(())
    }
}

/// Per-pixel Gaussian mixtures, each kept sorted by `weight / sigma`
/// descending.
#[derive(Clone, Debug)]
pub struct BackgroundModel {
    width: u32,
    height: u32,
    params: MogParams,
    slots: Vec<GaussianComponent>,
    counts: Vec<u8>,
}

pub fn mog_init(first: &Frame, params: MogParams) -> Result<BackgroundModel> {
    BackgroundModel::new(first, params)
}

impl BackgroundModel {
    pub fn new(first: &Frame, params: MogParams) -> Result<Self> {
        params.validate()?;
        let k = params.k;
        let n = first.width() as usize * first.height() as usize;
        let empty = GaussianComponent { mean: [0.0; 3], variance: params.initial_variance, weight: 0.0 };
        let mut slots = vec![empty; n * k];
        for (i, px) in first.data().chunks_exact(3).enumerate() {
            slots[i * k] = GaussianComponent {
                mean: [px[0] as f64, px[1] as f64, px[2] as f64],
                variance: params.initial_variance,
                weight: 1.0,
            };
        }
        Ok(BackgroundModel { width: first.width(), height: first.height(), params, slots, counts: vec![1; n] })
    }

    pub fn params(&self) -> &MogParams {
        &self.params
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn components(&self, x: u32, y: u32) -> &[GaussianComponent] {
        let i = y as usize * self.width as usize + x as usize;
        let k = self.params.k;
        &self.slots[i * k..i * k + self.counts[i] as usize]
    }

    /// Folds `frame` into the model and returns its foreground mask.
    pub fn update(&mut self, frame: &Frame) -> Result<BinaryMask> {
        if frame.dims() != (self.width, self.height) {
            return Err(Error::Dimension(format!(
                "frame is {}x{}, model is {}x{}",
                frame.width(),
                frame.height(),
                self.width,
                self.height
            )));
        }
        let k = self.params.k;
        let w = self.width as usize;
        let params = self.params;
        let mut fg = vec![false; w * self.height as usize];
        self.slots
            .par_chunks_mut(w * k)
            .zip(self.counts.par_chunks_mut(w))
            .zip(fg.par_chunks_mut(w))
            .zip(frame.data().par_chunks(w * 3))
            .for_each(|(((slots, counts), fg), pixels)| {
                for x in 0..w {
                    let px = &pixels[x * 3..x * 3 + 3];
                    let value = [px[0] as f64, px[1] as f64, px[2] as f64];
                    fg[x] = update_pixel(&mut slots[x * k..(x + 1) * k], &mut counts[x], value, &params);
                }
            });
        BinaryMask::from_vec(self.width, self.height, fg)
    }
}

/// Updates one pixel's mixture in place; returns true for foreground.
fn update_pixel(comps: &mut [GaussianComponent], count: &mut u8, x: [f64; 3], p: &MogParams) -> bool {
    let n = *count as usize;
    let dist2 = |c: &GaussianComponent| -> f64 { (0..3).map(|ch| (x[ch] - c.mean[ch]).powi(2)).sum() };
    let matched = comps[..n].iter().position(|c| dist2(c) <= p.lambda * p.lambda * c.variance);

    let target = match matched {
        Some(m) => {
            for (j, c) in comps[..n].iter_mut().enumerate() {
                c.weight = (1.0 - p.alpha) * c.weight + if j == m { p.alpha } else { 0.0 };
            }
            let rho = p.alpha;
            let c = &mut comps[m];
            for ch in 0..3 {
                c.mean[ch] = (1.0 - rho) * c.mean[ch] + rho * x[ch];
            }
            let d2 = dist2(c) / 3.0;
            c.variance = ((1.0 - rho) * c.variance + rho * d2).max(p.variance_floor);
            m
        }
        None => {
            let fresh = GaussianComponent { mean: x, variance: p.initial_variance, weight: NEW_COMPONENT_WEIGHT };
            if n < comps.len() {
                comps[n] = fresh;
                *count += 1;
                n
            } else {
                comps[n - 1] = fresh;
                n - 1
            }
        }
    };
    let n = *count as usize;
    let total: f64 = comps[..n].iter().map(|c| c.weight).sum();
    for c in comps[..n].iter_mut() {
        c.weight /= total;
    }

    // Insertion sort by rank keeps ties in place and tracks the target.
    let mut pos = target;
    for i in 1..n {
        let mut j = i;
        while j > 0 && comps[j].rank() > comps[j - 1].rank() {
            comps.swap(j, j - 1);
            if pos == j {
                pos = j - 1;
            } else if pos == j - 1 {
                pos = j;
            }
            j -= 1;
        }
    }

    let before: f64 = comps[..pos].iter().map(|c| c.weight).sum();
    before >= p.background_fraction
}

/// Fraction of frames in which each pixel was foreground.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl ObjectMap {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Per-pixel mean of the foreground indicators.
pub fn aggregate_foreground(masks: &[BinaryMask]) -> Result<ObjectMap> {
    let first = masks.first().ok_or_else(|| Error::Dimension("no masks to aggregate".into()))?;
    let (w, h) = first.dims();
    if masks.iter().any(|m| m.dims() != (w, h)) {
        return Err(Error::Dimension("masks differ in size".into()));
    }
    let mut counts = vec![0u32; w as usize * h as usize];
    for m in masks {
        for (c, &b) in counts.iter_mut().zip(m.data()) {
            *c += b as u32;
        }
    }
    let n = masks.len() as f64;
    Ok(ObjectMap { width: w, height: h, values: counts.iter().map(|&c| c as f64 / n).collect() })
}

/// Runs the background model over a sequence. The first frame only seeds the
/// model, so its mask is all background.
pub fn foreground_masks(seq: &FrameSequence, params: MogParams) -> Result<Vec<BinaryMask>> {
    let frames = seq.frames();
    let mut model = BackgroundModel::new(&frames[0], params)?;
    let (w, h) = seq.dims();
    let mut masks = Vec::with_capacity(frames.len());
    masks.push(BinaryMask::new(w, h));
    for f in &frames[1..] {
        masks.push(model.update(f)?);
    }
    Ok(masks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionOfInterest {
    pub bbox: Rect,
    /// Object pixels inside `bbox`.
    pub mask: BinaryMask,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoiParams {
    /// Minimum foreground frequency for a pixel to count as object.
    pub persistence: f64,
    /// Bounding-box growth on each side, as a fraction of the frame size.
    pub margin_fraction: f64,
}

impl Default for RoiParams {
    fn default() -> Self {
        RoiParams { persistence: 0.3, margin_fraction: 0.05 }
    }
}

impl RoiParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.persistence > 0.0 && self.persistence <= 1.0) {
            return Err(Error::Parameter(format!("persistence must be in (0,1], got {}", self.persistence)));
        }
        if !(0.0..=1.0).contains(&self.margin_fraction) {
            return Err(Error::Parameter(format!("roi margin must be in [0,1], got {}", self.margin_fraction)));
        }
        Ok(())
    }
}

pub fn extract_roi(map: &ObjectMap, persistence: f64) -> Result<RegionOfInterest> {
    extract_roi_with(map, &RoiParams { persistence, ..RoiParams::default() })
}

/// Threshold, close, keep the largest 8-connected blob and grow its box.
pub fn extract_roi_with(map: &ObjectMap, params: &RoiParams) -> Result<RegionOfInterest> {
    params.validate()?;
    let raw = BinaryMask::from_vec(
        map.width,
        map.height,
        map.values.iter().map(|&v| v >= params.persistence).collect(),
    )?;
    if raw.is_empty() {
        return Err(Error::NoObjectDetected);
    }
    let closed = close3x3(&raw);
    let blob = connected_components(&closed, Connectivity::Eight)
        .into_iter()
        .next()
        .ok_or(Error::NoObjectDetected)?;
    let mx = (params.margin_fraction * map.width as f64).round() as u32;
    let my = (params.margin_fraction * map.height as f64).round() as u32;
    let bbox = blob.bbox.expand_xy_clamped(mx, my, map.width, map.height);
    let mut mask = BinaryMask::new(bbox.w, bbox.h);
    for &(x, y) in &blob.pixels {
        mask.set(x - bbox.x, y - bbox.y, true);
    }
    Ok(RegionOfInterest { bbox, mask })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray_frame(w: u32, h: u32, v: u8) -> Frame {
        Frame::filled(w, h, [v, v, v])
    }

    #[test]
    fn init_gives_one_component_per_pixel() {
        let f = Frame::from_fn(4, 3, |x, y| [10 + x as u8, 20 + y as u8, 30]);
        let m = mog_init(&f, MogParams::default()).unwrap();
        for y in 0..3 {
            for x in 0..4 {
                let cs = m.components(x, y);
                assert_eq!(cs.len(), 1);
                assert_eq!(cs[0].weight, 1.0);
                assert_eq!(cs[0].mean, [10.0 + x as f64, 20.0 + y as f64, 30.0]);
            }
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let f = gray_frame(2, 2, 0);
        for p in [
            MogParams { k: 0, ..MogParams::default() },
            MogParams { alpha: 1.0, ..MogParams::default() },
            MogParams { alpha: 0.0, ..MogParams::default() },
            MogParams { background_fraction: 0.0, ..MogParams::default() },
            MogParams { background_fraction: 1.5, ..MogParams::default() },
        ] {
            assert!(matches!(mog_init(&f, p), Err(Error::Parameter(_))), "{p:?}");
        }
    }

    #[test]
    fn constant_video_is_background() {
        let f = gray_frame(5, 4, 120);
        let mut m = mog_init(&f, MogParams::default()).unwrap();
        for _ in 1..50 {
            assert!(m.update(&f).unwrap().is_empty());
        }
    }

    #[test]
    fn jump_after_long_hold_is_foreground() {
        let hold = gray_frame(1, 1, 100);
        let mut m = mog_init(&hold, MogParams::default()).unwrap();
        for _ in 1..50 {
            assert!(m.update(&hold).unwrap().is_empty());
        }
        assert!(m.update(&gray_frame(1, 1, 200)).unwrap().get(0, 0));
        let w: f64 = m.components(0, 0).iter().map(|c| c.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_frame_is_rejected() {
        let mut m = mog_init(&gray_frame(3, 3, 0), MogParams::default()).unwrap();
        assert!(matches!(m.update(&gray_frame(4, 3, 0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn aggregate_examples() {
        let a = BinaryMask::from_fn(3, 1, |x, _| x == 1);
        let id = aggregate_foreground(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert_eq!(id.values, vec![0.0, 1.0, 0.0]);
        assert_eq!(aggregate_foreground(std::slice::from_ref(&a)).unwrap().values, vec![0.0, 1.0, 0.0]);

        let on = BinaryMask::from_fn(1, 1, |_, _| true);
        let off = BinaryMask::new(1, 1);
        let masks: Vec<_> = (0..10).map(|i| if i < 5 { on.clone() } else { off.clone() }).collect();
        assert_eq!(aggregate_foreground(&masks).unwrap().values, vec![0.5]);

        assert!(aggregate_foreground(&[]).is_err());
        assert!(aggregate_foreground(&[on, BinaryMask::new(2, 1)]).is_err());
    }

    fn block_map(w: u32, h: u32, blocks: &[Rect]) -> ObjectMap {
        let mut values = vec![0.0; (w * h) as usize];
        for b in blocks {
            for y in b.y..b.bottom() {
                for x in b.x..b.right() {
                    values[(y * w + x) as usize] = 1.0;
                }
            }
        }
        ObjectMap { width: w, height: h, values }
    }

    #[test]
    fn uniform_zero_map_has_no_object() {
        let map = block_map(20, 20, &[]);
        assert!(matches!(extract_roi(&map, 0.3), Err(Error::NoObjectDetected)));
    }

    #[test]
    fn block_roi_is_dilated_by_five_percent() {
        let map = block_map(200, 200, &[Rect::new(80, 60, 40, 40)]);
        let roi = extract_roi(&map, 0.3).unwrap();
        assert_eq!(roi.bbox, Rect::new(70, 50, 60, 60));
        assert_eq!(roi.mask.count(), 1600);

        let corner = block_map(200, 200, &[Rect::new(0, 0, 40, 40)]);
        assert_eq!(extract_roi(&corner, 0.3).unwrap().bbox, Rect::new(0, 0, 50, 50));
    }

    #[test]
    fn largest_blob_wins() {
        let map = block_map(200, 200, &[Rect::new(10, 10, 10, 10), Rect::new(100, 100, 5, 6)]);
        let roi = extract_roi(&map, 0.3).unwrap();
        assert!(roi.bbox.contains(&Rect::new(10, 10, 10, 10)));
        assert!(!roi.bbox.contains_point(100, 100));
    }

    proptest! {
        #[test]
        fn aggregate_in_unit_range(bits in proptest::collection::vec(any::<bool>(), 12..=120)) {
            let n = bits.len() / 12;
            let masks: Vec<_> = (0..n)
                .map(|i| BinaryMask::from_vec(4, 3, bits[i * 12..(i + 1) * 12].to_vec()).unwrap())
                .collect();
            let map = aggregate_foreground(&masks).unwrap();
            prop_assert!(map.values.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn weights_stay_normalized(frames in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 12), 2..30)) {
            let mk = |d: &Vec<u8>| Frame::new(2, 2, d.clone()).unwrap();
            let mut m = mog_init(&mk(&frames[0]), MogParams::default()).unwrap();
            for f in &frames[1..] {
                m.update(&mk(f)).unwrap();
                for y in 0..2 {
                    for x in 0..2 {
                        let cs = m.components(x, y);
                        let s: f64 = cs.iter().map(|c| c.weight).sum();
                        prop_assert!((s - 1.0).abs() <= 1e-6);
                        prop_assert!(cs.len() <= 3);
                        prop_assert!(cs.iter().all(|c| c.variance >= 4.0));
                    }
                }
            }
        }
    }
}
