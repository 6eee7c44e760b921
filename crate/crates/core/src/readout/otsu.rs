use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GrayImage};

/// Between-class variance of the split `values <= t` / `values > t`, from
/// the class-0 pixel count and intensity sum.
pub fn between_class_variance(n0: u64, s0: u64, total: u64, sum: u64) -> f64 {
    let n1 = total - n0;
    let w0 = n0 as f64 / total as f64;
    let w1 = n1 as f64 / total as f64;
    let mu0 = s0 as f64 / n0 as f64;
    let mu1 = (sum - s0) as f64 / n1 as f64;
    w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
}

/// Threshold maximizing the between-class variance (lowest on ties), or
/// `None` when every pixel has the same value.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    let sum: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best: Option<(u8, f64)> = None;
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        if n0 == 0 || n0 == total {
            continue;
        }
        let var = between_class_variance(n0, s0, total, sum);
        if best.is_none_or(|(_, b)| var > b) {
            best = Some((t as u8, var));
        }
    }
    best.map(|(t, _)| t)
}

pub fn histogram(g: &GrayImage) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &v in g.data() {
        h[v as usize] += 1;
    }
    h
}

/// Pixels per side that are forced to background.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Margins {
    pub left: u32,
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
}

impl Margins {
    pub const fn uniform(m: u32) -> Self {
        Margins { left: m, top: m, right: m, bottom: m }
    }

    fn inside(&self, x: u32, y: u32, w: u32, h: u32) -> bool {
        x >= self.left && y >= self.top && x + self.right < w && y + self.bottom < h
    }
}

/// Otsu binarization with a 5-pixel background band on every side.
pub fn otsu_binarize(patch: &GrayImage) -> Result<BinaryMask> {
    otsu_binarize_with_margins(patch, Margins::uniform(5))
}

/// Otsu binarization. The sparser of the two classes is taken as ink; on an
/// exact tie the dark class wins. Pixels inside the margins are background.
pub fn otsu_binarize_with_margins(patch: &GrayImage, margins: Margins) -> Result<BinaryMask> {
    if patch.is_empty() {
        return Err(Error::Degenerate("empty patch".into()));
    }
    let hist = histogram(patch);
    let t = otsu_threshold(&hist).ok_or_else(|| Error::Degenerate("constant patch has a one-bin histogram".into()))?;
    let dark: u64 = hist[..=t as usize].iter().sum();
    let light = patch.data().len() as u64 - dark;
    let ink_is_dark = dark <= light;
    let (w, h) = (patch.width(), patch.height());
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        margins.inside(x, y, w, h) && ((patch.get(x, y) <= t) == ink_is_dark)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Recomputes every split from scratch with the textbook formula.
    fn exhaustive(hist: &[u64; 256]) -> Option<u8> {
        let total: u64 = hist.iter().sum();
        let mut best: Option<(u8, f64)> = None;
        for t in 0..256usize {
            let n0: u64 = hist[..=t].iter().sum();
            let n1: u64 = hist[t + 1..].iter().sum();
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let s0: u64 = (0..=t).map(|v| v as u64 * hist[v]).sum();
            let s1: u64 = (t + 1..256).map(|v| v as u64 * hist[v]).sum();
            let (w0, w1) = (n0 as f64 / total as f64, n1 as f64 / total as f64);
            let (mu0, mu1) = (s0 as f64 / n0 as f64, s1 as f64 / n1 as f64);
            let var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
            assert!(var >= 0.0);
            if best.is_none_or(|(_, b)| var > b) {
                best = Some((t as u8, var));
            }
        }
        best.map(|(t, _)| t)
    }

    #[test]
    fn bimodal_split() {
        let g = GrayImage::from_fn(20, 20, |x, _| if x < 10 { 0 } else { 255 });
        let t = otsu_threshold(&histogram(&g)).unwrap();
        assert_eq!(Some(t), exhaustive(&histogram(&g)));
        assert_eq!(t, 0);
    }

    #[test]
    fn constant_patch_is_degenerate() {
        assert!(matches!(otsu_binarize(&GrayImage::filled(20, 20, 7)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn minority_class_is_ink() {
        // dark text on a light ground, and the inverse
        let dark = GrayImage::from_fn(30, 20, |x, y| if (12..18).contains(&x) && (8..12).contains(&y) { 10 } else { 240 });
        let m = otsu_binarize(&dark).unwrap();
        assert_eq!(m.count(), 24);
        assert!(m.get(12, 8));
        let light = GrayImage::from_fn(30, 20, |x, y| 250 - dark.get(x, y));
        assert_eq!(otsu_binarize(&light).unwrap(), m);
    }

    #[test]
    fn margins_are_background() {
        let g = GrayImage::from_fn(16, 16, |x, y| if (x + y) % 2 == 0 { 0 } else { 200 });
        let m = otsu_binarize(&g).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                if !(5..11).contains(&x) || !(5..11).contains(&y) {
                    assert!(!m.get(x, y));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(counts in proptest::collection::vec(0u64..50, 256)) {
            let mut hist = [0u64; 256];
            hist.copy_from_slice(&counts);
            prop_assert_eq!(otsu_threshold(&hist), exhaustive(&hist));
        }
    }
}
