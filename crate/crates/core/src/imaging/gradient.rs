use std::f64::consts::TAU;

use super::GrayImage;
use crate::error::{Error, Result};

/// Per-pixel Sobel response.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// `atan2(gy, gx)` wrapped into `[0, 2π)`; 0 where the magnitude is 0.
    pub orientation: Vec<f64>,
}

impl GradientField {
    pub fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }
}

/// 3x3 Sobel gradients with replicated-edge sampling.
pub fn sobel(g: &GrayImage) -> Result<GradientField> {
    sobel_values(g.width(), g.height(), &g.to_f64())
}

pub(crate) fn sobel_values(width: u32, height: u32, values: &[f64]) -> Result<GradientField> {
    if width < 3 || height < 3 {
        return Err(Error::Dimension(format!("sobel needs at least 3x3, got {width}x{height}")));
    }
    debug_assert_eq!(values.len(), width as usize * height as usize);
    let (w, h) = (width as i64, height as i64);
    let at = |x: i64, y: i64| -> f64 {
        let x = x.clamp(0, w - 1) as usize;
        let y = y.clamp(0, h - 1) as usize;
        values[y * w as usize + x]
    };
    let n = values.len();
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    let mut magnitude = Vec::with_capacity(n);
    let mut orientation = Vec::with_capacity(n);
    for y in 0..h {
        for x in 0..w {
            let dx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let dy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let m = (dx * dx + dy * dy).sqrt();
            gx.push(dx);
            gy.push(dy);
            magnitude.push(m);
            orientation.push(if m > 0.0 { wrap_angle(dy.atan2(dx)) } else { 0.0 });
        }
    }
    Ok(GradientField { width, height, gx, gy, magnitude, orientation })
}

fn wrap_angle(theta: f64) -> f64 {
    let t = if theta < 0.0 { theta + TAU } else { theta };
    if t >= TAU {
        0.0
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = GrayImage::filled(6, 5, 77);
        let f = sobel(&g).unwrap();
        assert!(f.gx.iter().chain(&f.gy).all(|&v| v == 0.0));
    }

    #[test]
    fn horizontal_ramp_gives_gx_8() {
        let g = GrayImage::from_fn(8, 6, |x, _| x as u8);
        let f = sobel(&g).unwrap();
        for y in 1..5 {
            for x in 1..7 {
                let i = f.index(x, y);
                assert_eq!(f.gx[i], 8.0);
                assert_eq!(f.gy[i], 0.0);
                assert_eq!(f.orientation[i], 0.0);
            }
        }
    }

    #[test]
    fn too_small_is_a_dimension_error() {
        assert!(matches!(sobel(&GrayImage::filled(2, 5, 0)), Err(Error::Dimension(_))));
    }

    proptest! {
        #[test]
        fn transpose_swaps_components(w in 3u32..9, h in 3u32..9, seed in any::<u64>()) {
            let mut s = seed;
            let g = GrayImage::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            });
            let a = sobel(&g).unwrap();
            let b = sobel(&g.transpose()).unwrap();
            for y in 0..h {
                for x in 0..w {
                    let i = a.index(x, y);
                    let j = b.index(y, x);
                    prop_assert_eq!(a.gx[i], b.gy[j]);
                    prop_assert_eq!(a.gy[i], b.gx[j]);
                }
            }
        }

        #[test]
        fn shift_invariant_and_consistent(
            w in 3u32..10, h in 3u32..10, c in 0u8..40,
            pixels in proptest::collection::vec(0u8..=215, 100),
        ) {
            let g = GrayImage::from_fn(w, h, |x, y| pixels[(y * w + x) as usize % pixels.len()]);
            let shifted = GrayImage::from_fn(w, h, |x, y| g.get(x, y) + c);
            let a = sobel(&g).unwrap();
            let b = sobel(&shifted).unwrap();
            prop_assert_eq!(&a, &b);
            for i in 0..a.gx.len() {
                let m2 = a.gx[i] * a.gx[i] + a.gy[i] * a.gy[i];
                prop_assert!((a.magnitude[i].powi(2) - m2).abs() <= 1e-9 * m2.max(1.0));
                prop_assert!(a.orientation[i] >= 0.0 && a.orientation[i] < TAU);
            }
        }
    }
}
