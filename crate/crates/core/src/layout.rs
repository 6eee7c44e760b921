//! Rule-based layout analysis: color layers, character candidates and
//! horizontal grouping into candidate text lines.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::imaging::{connected_components, BinaryMask, Connectivity, Frame, Rect};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayoutParams {
    pub max_layers: usize,
    /// Smallest character height in pixels.
    pub h_min: u32,
    /// Largest character height as a fraction of the crop height.
    pub h_max_fraction: f64,
    pub aspect_min: f64,
    pub aspect_max: f64,
    pub fill_min: f64,
    pub fill_max: f64,
    /// Vertical overlap (relative to the smaller height) needed to chain.
    pub min_overlap: f64,
    /// Largest horizontal gap, in multiples of the wider box's width.
    pub max_gap_ratio: f64,
    pub max_height_ratio: f64,
    pub min_members: usize,
    /// Regions scoring below this are not passed on to classification.
    pub min_score: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            max_layers: 6,
            h_min: 8,
            h_max_fraction: 0.8,
            aspect_min: 0.1,
            aspect_max: 2.0,
            fill_min: 0.1,
            fill_max: 0.95,
            min_overlap: 0.5,
            max_gap_ratio: 2.0,
            max_height_ratio: 2.0,
            min_members: 3,
            min_score: 0.5,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Parameter(m.to_string()));
        if self.max_layers < 2 {
            return bad("layout.max_layers must be at least 2");
        }
        if !(self.h_max_fraction > 0.0 && self.h_max_fraction <= 1.0) {
            return bad("layout.h_max_fraction must be in (0,1]");
        }
        if !(self.aspect_min > 0.0 && self.aspect_min <= self.aspect_max) {
            return bad("layout aspect bounds need 0 < min <= max");
        }
        if !(0.0 <= self.fill_min && self.fill_min <= self.fill_max && self.fill_max <= 1.0) {
            return bad("layout fill bounds need 0 <= min <= max <= 1");
        }
        if !(0.0..=1.0).contains(&self.min_overlap) {
            return bad("layout.min_overlap must be in [0,1]");
        }
        if self.max_gap_ratio < 0.0 || self.max_height_ratio < 1.0 {
            return bad("layout gap ratio must be >= 0 and height ratio >= 1");
        }
        if self.min_members < 1 {
            return bad("layout.min_members must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.min_score) {
            return bad("layout.min_score must be in [0,1]");
        }
        Ok(())
    }
}

/// Pixels of the crop assigned to one representative color.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorLayer {
    pub color: [u8; 3],
    pub mask: BinaryMask,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CharBox {
    pub bbox: Rect,
    pub layer: usize,
    pub pixel_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateRegion {
    pub bbox: Rect,
    /// Ordered left to right.
    pub members: Vec<CharBox>,
    pub score: f64,
}

impl CandidateRegion {
    fn from_members(members: Vec<CharBox>) -> Self {
        let bbox = members.iter().skip(1).fold(members[0].bbox, |acc, m| acc.union(&m.bbox));
        let mut region = CandidateRegion { bbox, members, score: 0.0 };
        region.score = layout_score(&region);
        region
    }
}

fn bin_of(rgb: &[u8]) -> usize {
    ((rgb[0] as usize >> 4) << 8) | ((rgb[1] as usize >> 4) << 4) | (rgb[2] as usize >> 4)
}

fn bin_center(bin: usize) -> [u8; 3] {
    [((bin >> 8) as u8) << 4 | 8, (((bin >> 4) & 15) as u8) << 4 | 8, ((bin & 15) as u8) << 4 | 8]
}

/// Splits a crop into at most `max_layers` color layers.
///
/// Channels are quantized to 16 levels; the most populous bins become seeds
/// and every pixel joins the seed nearest to its original color. Ties go to
/// the more populous seed.
pub fn reduce_colors(crop: &Frame, max_layers: usize) -> Result<Vec<ColorLayer>> {
    if max_layers < 2 {
        return Err(Error::Parameter(format!("max_layers must be at least 2, got {max_layers}")));
    }
    let mut hist = vec![0u32; 4096];
    for px in crop.data().chunks_exact(3) {
        hist[bin_of(px)] += 1;
    }
    let mut bins: Vec<usize> = (0..4096).filter(|&b| hist[b] > 0).collect();
    bins.sort_by(|&a, &b| hist[b].cmp(&hist[a]).then(a.cmp(&b)));
    bins.truncate(max_layers);
    let seeds: Vec<[u8; 3]> = bins.iter().map(|&b| bin_center(b)).collect();

    let (w, h) = crop.dims();
    let mut masks = vec![BinaryMask::new(w, h); seeds.len()];
    for (i, px) in crop.data().chunks_exact(3).enumerate() {
        let mut best = 0;
        let mut best_d = u32::MAX;
        for (s, seed) in seeds.iter().enumerate() {
            let d: u32 = (0..3).map(|c| (px[c] as i32 - seed[c] as i32).pow(2) as u32).sum();
            if d < best_d {
                best_d = d;
                best = s;
            }
        }
        masks[best].set(i as u32 % w, i as u32 / w, true);
    }
    Ok(seeds
        .into_iter()
        .zip(masks)
        .filter(|(_, m)| !m.is_empty())
        .map(|(color, mask)| ColorLayer { color, mask })
        .collect())
}

/// Connected components of every layer that look like characters.
pub fn extract_char_candidates(layers: &[ColorLayer], params: &LayoutParams) -> Vec<CharBox> {
    let mut out = Vec::new();
    for (li, layer) in layers.iter().enumerate() {
        let h_max = params.h_max_fraction * layer.mask.height() as f64;
        for c in connected_components(&layer.mask, Connectivity::Eight) {
            let (w, h) = (c.bbox.w as f64, c.bbox.h as f64);
            let aspect = w / h;
            let fill = c.pixel_count as f64 / (w * h);
            if c.bbox.h >= params.h_min
                && h <= h_max
                && (params.aspect_min..=params.aspect_max).contains(&aspect)
                && (params.fill_min..=params.fill_max).contains(&fill)
            {
                out.push(CharBox { bbox: c.bbox, layer: li, pixel_count: c.pixel_count });
            }
        }
    }
    out
}

fn vertical_overlap_ratio(a: &Rect, b: &Rect) -> f64 {
    let top = a.y.max(b.y);
    let bottom = a.bottom().min(b.bottom());
    let overlap = bottom.saturating_sub(top) as f64;
    overlap / a.h.min(b.h) as f64
}

fn adjacent(a: &CharBox, b: &CharBox, params: &LayoutParams) -> bool {
    if b.bbox.x <= a.bbox.x || b.bbox.right() <= a.bbox.right() {
        return false;
    }
    let gap = b.bbox.x as f64 - a.bbox.right() as f64;
    let (hi, lo) = (a.bbox.h.max(b.bbox.h) as f64, a.bbox.h.min(b.bbox.h) as f64);
    vertical_overlap_ratio(&a.bbox, &b.bbox) >= params.min_overlap
        && gap <= params.max_gap_ratio * a.bbox.w.max(b.bbox.w) as f64
        && hi / lo <= params.max_height_ratio
}

fn canonical(a: &CharBox, b: &CharBox) -> Ordering {
    (a.layer, a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h, a.pixel_count)
        .cmp(&(b.layer, b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h, b.pixel_count))
}

/// Greedy left-to-right chaining of same-layer character boxes. Each chain
/// repeatedly takes the leftmost unused box adjacent to its last member;
/// chains shorter than `min_members` are discarded.
pub fn group_adjacent(chars: &[CharBox], params: &LayoutParams) -> Vec<CandidateRegion> {
    let mut sorted = chars.to_vec();
    sorted.sort_by(canonical);
    let mut used = vec![false; sorted.len()];
    let mut out = Vec::new();

    for start in 0..sorted.len() {
        if used[start] {
            continue;
        }
        let mut chain = vec![start];
        let mut last = start;
        loop {
            let next = (last + 1..sorted.len()).find(|&j| {
                !used[j] && sorted[j].layer == sorted[start].layer && adjacent(&sorted[last], &sorted[j], params)
            });
            match next {
                Some(j) => {
                    chain.push(j);
                    last = j;
                }
                None => break,
            }
        }
        if chain.len() >= params.min_members.max(1) {
            for &i in &chain {
                used[i] = true;
            }
            out.push(CandidateRegion::from_members(chain.iter().map(|&i| sorted[i]).collect()));
        }
    }
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn uniformity(values: &[f64]) -> f64 {
    let (mean, std) = mean_std(values);
    if std == 0.0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    (1.0 - std / mean).clamp(0.0, 1.0)
}

/// Text-layout suitability in `[0, 1]`: a weighted mix of baseline alignment,
/// height uniformity and spacing uniformity of the members.
pub fn layout_score(region: &CandidateRegion) -> f64 {
    let m = &region.members;
    let heights: Vec<f64> = m.iter().map(|c| c.bbox.h as f64).collect();
    let centers: Vec<f64> = m.iter().map(|c| c.bbox.y as f64 + c.bbox.h as f64 / 2.0).collect();
    let (mean_h, _) = mean_std(&heights);
    let (_, center_std) = mean_std(&centers);
    let alignment = (1.0 - center_std / mean_h).clamp(0.0, 1.0);
    let size = uniformity(&heights);
    let gaps: Vec<f64> = m.windows(2).map(|p| p[1].bbox.x as f64 - p[0].bbox.right() as f64).collect();
    let spacing = if gaps.len() < 2 { 1.0 } else { uniformity(&gaps) };
    0.5 * alignment + 0.3 * size + 0.2 * spacing
}

/// Full layout pass over a crop: regions scoring at least `min_score`,
/// best first.
pub fn candidate_regions(crop: &Frame, params: &LayoutParams) -> Result<Vec<CandidateRegion>> {
    params.validate()?;
    let layers = reduce_colors(crop, params.max_layers)?;
    let chars = extract_char_candidates(&layers, params);
    let mut regions: Vec<_> =
        group_adjacent(&chars, params).into_iter().filter(|r| r.score >= params.min_score).collect();
    regions.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.bbox.cmp(&b.bbox)));
    Ok(regions)
}

/// Debug listing: one `x y w h score memberCount` line per region.
pub fn format_regions(regions: &[CandidateRegion]) -> String {
    let mut s = String::new();
    for r in regions {
        let _ = writeln!(s, "{} {:.6} {}", r.bbox, r.score, r.members.len());
    }
    s
}
