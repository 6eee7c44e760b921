//! Patch features for the text classifier.
//!
//! A crop is resampled to a fixed height, edges are found with Canny, and two
//! kinds of per-pixel maps are built: gradient magnitude split into stroke
//! orientation bins, and local edge density. Block patterns pool the maps into
//! a fixed-length vector.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{canny_values, sobel_values, BinaryMask, Canny, GrayImage};

/// Angles this close below a bin boundary are counted in the upper bin, so
/// exact multiples of the bin width are not lost to rounding in `atan2`.
const BIN_SNAP: f64 = 1e-9;

/// Grid of `rows x cols` equal cells over the patch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPattern {
    pub rows: u32,
    pub cols: u32,
}

impl BlockPattern {
    pub const fn new(rows: u32, cols: u32) -> Self {
        BlockPattern { rows, cols }
    }

    pub fn cells(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    pub fn parse_list(s: &str) -> Result<Vec<BlockPattern>> {
        s.split(',')
            .map(|item| {
                let item = item.trim();
                let (r, c) = item
                    .split_once('x')
                    .ok_or_else(|| Error::Parameter(format!("block pattern {item:?} is not ROWSxCOLS")))?;
                let rows: u32 = r.trim().parse().map_err(|_| Error::Parameter(format!("bad rows in {item:?}")))?;
                let cols: u32 = c.trim().parse().map_err(|_| Error::Parameter(format!("bad cols in {item:?}")))?;
                if rows == 0 || cols == 0 {
                    return Err(Error::Parameter(format!("block pattern {item:?} has an empty axis")));
                }
                Ok(BlockPattern { rows, cols })
            })
            .collect()
    }

    pub fn format_list(patterns: &[BlockPattern]) -> String {
        patterns.iter().map(|p| format!("{}x{}", p.rows, p.cols)).collect::<Vec<_>>().join(",")
    }
}

pub const DEFAULT_PATTERNS: [BlockPattern; 5] = [
    BlockPattern::new(1, 1),
    BlockPattern::new(2, 2),
    BlockPattern::new(1, 3),
    BlockPattern::new(3, 1),
    BlockPattern::new(2, 4),
];

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureParams {
    pub patch_height: u32,
    pub min_width: u32,
    pub max_width: u32,
    pub orientation_bins: usize,
    /// Side of the square edge-density window.
    pub density_window: u32,
    pub canny: Canny,
    pub patterns: Vec<BlockPattern>,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            patch_height: 32,
            min_width: 32,
            max_width: 256,
            orientation_bins: 8,
            density_window: 7,
            canny: Canny::default(),
            patterns: DEFAULT_PATTERNS.to_vec(),
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.patch_height < 3 {
            return bad("features.patch_height must be at least 3");
        }
        if self.min_width < 3 || self.min_width > self.max_width {
            return bad("features width bounds need 3 <= min_width <= max_width");
        }
        if self.orientation_bins == 0 {
            return bad("features.orientation_bins must be positive");
        }
        if self.density_window == 0 || self.density_window.is_multiple_of(2) {
            return bad("features.density_window must be odd");
        }
        if self.patterns.is_empty() {
            return bad("features.patterns must not be empty");
        }
        if self.patterns.iter().any(|p| p.rows > self.patch_height || p.cols > self.min_width) {
            return bad("block pattern finer than the smallest patch");
        }
        self.canny.validate()
    }

    pub fn vector_len(&self) -> usize {
        self.patterns.iter().map(BlockPattern::cells).sum::<usize>() * (self.orientation_bins + 1)
    }
}

/// Fixed-height resampled crop. Values are multiples of 1/65536, which keeps
/// downstream arithmetic exact.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedPatch {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl NormalizedPatch {
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

pub fn normalize_patch(crop: &GrayImage) -> Result<NormalizedPatch> {
    normalize_patch_with(crop, &FeatureParams::default())
}

/// Bilinear resize to `patch_height`, keeping the aspect ratio within the
/// configured width bounds. Interpolation weights are 8-bit fixed point.
pub fn normalize_patch_with(crop: &GrayImage, params: &FeatureParams) -> Result<NormalizedPatch> {
    if crop.is_empty() {
        return Err(Error::Dimension("cannot normalize an empty crop".into()));
    }
    let (sw, sh) = (crop.width(), crop.height());
    let th = params.patch_height;
    let tw = ((th as f64 * sw as f64 / sh as f64).round() as u32).clamp(params.min_width, params.max_width);

    let taps = |target: u32, source: u32| -> Vec<(u32, u32, i64)> {
        let scale = source as f64 / target as f64;
        (0..target)
            .map(|t| {
                let s = ((t as f64 + 0.5) * scale - 0.5).clamp(0.0, (source - 1) as f64);
                let mut lo = s.floor() as u32;
                let mut frac = ((s - lo as f64) * 256.0).round() as i64;
                if frac == 256 {
                    lo += 1;
                    frac = 0;
                }
                let hi = (lo + 1).min(source - 1);
                (lo, hi, frac)
            })
            .collect()
    };
    let xs = taps(tw, sw);
    let ys = taps(th, sh);
    let mut values = Vec::with_capacity(tw as usize * th as usize);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let v = |x, y| crop.get(x, y) as i64;
            let acc = (256 - fx) * (256 - fy) * v(x0, y0)
                + fx * (256 - fy) * v(x1, y0)
                + (256 - fx) * fy * v(x0, y1)
                + fx * fy * v(x1, y1);
            values.push(acc as f64 / 65536.0);
        }
    }
    Ok(NormalizedPatch { width: tw, height: th, values })
}

/// Gradient magnitude of edge pixels, split by unsigned orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientationMaps {
    pub width: u32,
    pub height: u32,
    pub planes: Vec<Vec<f64>>,
}

/// Bin of an orientation folded into `[0, π)`.
pub fn orientation_bin(theta: f64, bins: usize) -> usize {
    let folded = theta.rem_euclid(PI);
    let b = (folded / PI * bins as f64 + BIN_SNAP).floor() as usize;
    b.min(bins - 1)
}

pub fn stroke_orientation_map(p: &NormalizedPatch, edges: &BinaryMask) -> Result<OrientationMaps> {
    stroke_orientation_map_with(p, edges, 8)
}

pub fn stroke_orientation_map_with(p: &NormalizedPatch, edges: &BinaryMask, bins: usize) -> Result<OrientationMaps> {
    if edges.dims() != (p.width, p.height) {
        return Err(Error::Dimension(format!(
            "edge mask {}x{} does not match patch {}x{}",
            edges.width(),
            edges.height(),
            p.width,
            p.height
        )));
    }
    let grad = sobel_values(p.width, p.height, &p.values)?;
    let mut planes = vec![vec![0f64; p.values.len()]; bins];
    for (i, &on) in edges.data().iter().enumerate() {
        if on && grad.magnitude[i] > 0.0 {
            planes[orientation_bin(grad.orientation[i], bins)][i] = grad.magnitude[i];
        }
    }
    Ok(OrientationMaps { width: p.width, height: p.height, planes })
}

/// Fraction of edge pixels in a square window around each pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

pub fn edge_distribution_map(edges: &BinaryMask) -> DensityMap {
    edge_distribution_map_with(edges, 7)
}

pub fn edge_distribution_map_with(edges: &BinaryMask, window: u32) -> DensityMap {
    let (w, h) = (edges.width() as i64, edges.height() as i64);
    let r = (window / 2) as i64;
    let area = (window * window) as f64;
    let mut values = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut count = 0u32;
            for dy in -r..=r {
                let sy = (y + dy).clamp(0, h - 1) as u32;
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w - 1) as u32;
                    count += edges.get(sx, sy) as u32;
                }
            }
            values.push(count as f64 / area);
        }
    }
    DensityMap { width: edges.width(), height: edges.height(), values }
}

/// Pooled features, serialized as little-endian f32.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub Vec<f32>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }
}

/// Pools the maps over every cell of every pattern. Layout: patterns in
/// order, cells row-major, per cell the orientation means then the density
/// mean.
pub fn block_features(om: &OrientationMaps, dm: &DensityMap, patterns: &[BlockPattern]) -> Result<FeatureVector> {
    if (om.width, om.height) != (dm.width, dm.height) {
        return Err(Error::Dimension("orientation and density maps differ in size".into()));
    }
    let (w, h) = (om.width as usize, om.height as usize);
    let mut out = Vec::with_capacity(patterns.iter().map(BlockPattern::cells).sum::<usize>() * (om.planes.len() + 1));
    for pat in patterns {
        let (rows, cols) = (pat.rows as usize, pat.cols as usize);
        for r in 0..rows {
            let (y0, y1) = (r * h / rows, (r + 1) * h / rows);
            for c in 0..cols {
                let (x0, x1) = (c * w / cols, (c + 1) * w / cols);
                let n = ((y1 - y0) * (x1 - x0)) as f64;
                let cell_mean = |plane: &[f64]| -> f32 {
                    if n == 0.0 {
                        return 0.0;
                    }
                    let mut s = 0.0;
                    for y in y0..y1 {
                        s += plane[y * w + x0..y * w + x1].iter().sum::<f64>();
                    }
                    (s / n) as f32
                };
                for plane in &om.planes {
                    out.push(cell_mean(plane));
                }
                out.push(cell_mean(&dm.values));
            }
        }
    }
    Ok(FeatureVector(out))
}

/// Crop to feature vector.
pub fn extract_features(crop: &GrayImage, params: &FeatureParams) -> Result<FeatureVector> {
    let patch = normalize_patch_with(crop, params)?;
    let (edges, _) = canny_values(patch.width, patch.height, &patch.values, &params.canny)?;
    let om = stroke_orientation_map_with(&patch, &edges, params.orientation_bins)?;
    let dm = edge_distribution_map_with(&edges, params.density_window);
    block_features(&om, &dm, &params.patterns)
}

/// Feature vectors for many crops; order matches the input.
pub fn extract_batch(crops: &[GrayImage], params: &FeatureParams) -> Result<Vec<FeatureVector>> {
    crops.par_iter().map(|c| extract_features(c, params)).collect()
}

/// A training sample as stored in `.fvec` files.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledVector {
    pub label: bool,
    pub features: FeatureVector,
}

pub fn encode_fvec(records: &[LabeledVector]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        out.push(r.label as u8);
        for v in r.features.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_fvec(bytes: &[u8], vector_len: usize, name: &str) -> Result<Vec<LabeledVector>> {
    let record = 1 + 4 * vector_len;
    if !bytes.len().is_multiple_of(record) {
        return Err(Error::parse(
            name,
            format!("size {} is not a multiple of the {record}-byte record", bytes.len()),
        ));
    }
    bytes
        .chunks_exact(record)
        .enumerate()
        .map(|(i, rec)| {
            let label = match rec[0] {
                0 => false,
                1 => true,
                other => return Err(Error::parse(format!("{name} record {i}"), format!("label byte {other}"))),
            };
            let values = rec[1..]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            Ok(LabeledVector { label, features: FeatureVector(values) })
        })
        .collect()
}

pub fn write_fvec(path: impl AsRef<Path>, records: &[LabeledVector]) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_fvec(records)).map_err(|e| Error::io(path, e))
}

pub fn read_fvec(path: impl AsRef<Path>, vector_len: usize) -> Result<Vec<LabeledVector>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_fvec(&bytes, vector_len, &path.display().to_string())
}
