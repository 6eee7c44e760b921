use std::collections::VecDeque;
use std::f64::consts::PI;

use super::gradient::sobel_values;
use super::{BinaryMask, GradientField, GrayImage};
use crate::error::{Error, Result};

/// Canny detector settings. Thresholds apply to the Sobel magnitude of the
/// smoothed image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Canny {
    pub low: f64,
    pub high: f64,
    pub sigma: f64,
}

impl Default for Canny {
    fn default() -> Self {
        Canny { low: 40.0, high: 100.0, sigma: 1.0 }
    }
}

impl Canny {
    pub fn validate(&self) -> Result<()> {
        if !(self.low >= 0.0 && self.low <= self.high) {
            return Err(Error::Parameter(format!(
                "canny thresholds need 0 <= low <= high, got low={} high={}",
                self.low, self.high
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("canny sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn detect(&self, g: &GrayImage) -> Result<BinaryMask> {
        Ok(canny_values(g.width(), g.height(), &g.to_f64(), self)?.0)
    }
}

pub fn canny(g: &GrayImage, low: f64, high: f64) -> Result<BinaryMask> {
    Canny { low, high, ..Canny::default() }.detect(g)
}

/// Runs the detector on a real-valued image and also returns the gradient of
/// the smoothed image, which the feature stage reuses.
pub(crate) fn canny_values(
    width: u32,
    height: u32,
    values: &[f64],
    params: &Canny,
) -> Result<(BinaryMask, GradientField)> {
    params.validate()?;
    let smoothed = gaussian5(width, height, values, params.sigma);
    let grad = sobel_values(width, height, &smoothed)?;
    let thin = non_max_suppression(&grad);
    let mask = hysteresis(&grad, &thin, params.low, params.high);
    Ok((mask, grad))
}

/// 5-tap Gaussian weights quantized to integers summing to 256.
///
/// Dyadic weights keep smoothing exact in f64 for 8-bit (and 1/65536-step)
/// inputs, so adding a constant to the input shifts the output by exactly
/// that constant.
fn kernel5(sigma: f64) -> [f64; 5] {
    let raw: Vec<f64> = (-2..=2).map(|i: i32| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let mut k = [0f64; 5];
    for (dst, r) in k.iter_mut().zip(&raw) {
        *dst = (256.0 * r / total).round();
    }
    let side = k[0] + k[1] + k[3] + k[4];
    k[2] = 256.0 - side;
    k
}

fn gaussian5(width: u32, height: u32, values: &[f64], sigma: f64) -> Vec<f64> {
    let k = kernel5(sigma);
    let (w, h) = (width as i64, height as i64);
    let mut tmp = vec![0f64; values.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                let sx = (x + t as i64 - 2).clamp(0, w - 1);
                acc += kv * values[(y * w + sx) as usize];
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0f64; values.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                let sy = (y + t as i64 - 2).clamp(0, h - 1);
                acc += kv * tmp[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc / 65536.0;
        }
    }
    out
}

/// Keeps ridge pixels of the magnitude along the gradient direction. A pixel
/// survives if it is strictly larger than the neighbour behind it and at least
/// as large as the one ahead, which leaves a single pixel on symmetric ridges.
fn non_max_suppression(grad: &GradientField) -> Vec<f64> {
    let (w, h) = (grad.width as i64, grad.height as i64);
    let mag = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w || y >= h {
            0.0
        } else {
            grad.magnitude[(y * w + x) as usize]
        }
    };
    let mut out = vec![0f64; grad.magnitude.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = grad.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let theta = grad.orientation[i] % PI;
            let sector = ((theta / (PI / 4.0)) + 0.5).floor() as i64 % 4;
            let (dx, dy) = match sector {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            if m > mag(x - dx, y - dy) && m >= mag(x + dx, y + dy) {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(grad: &GradientField, thin: &[f64], low: f64, high: f64) -> BinaryMask {
    let (w, h) = (grad.width as i64, grad.height as i64);
    let mut mask = BinaryMask::new(grad.width, grad.height);
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m > 0.0 && m >= high {
            let (x, y) = ((i as i64 % w) as u32, (i as i64 / w) as u32);
            mask.set(x, y, true);
            queue.push_back((x as i64, y as i64));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for ny in y - 1..=y + 1 {
            for nx in x - 1..=x + 1 {
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if thin[j] > 0.0 && thin[j] >= low && !mask.get(nx as u32, ny as u32) {
                    mask.set(nx as u32, ny as u32, true);
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_is_dyadic_and_symmetric() {
        let k = kernel5(1.0);
        assert_eq!(k, [14.0, 63.0, 102.0, 63.0, 14.0]);
    }

    #[test]
    fn constant_image_has_no_edges() {
        let g = GrayImage::filled(12, 12, 90);
        assert!(canny(&g, 10.0, 20.0).unwrap().is_empty());
    }

    #[test]
    fn vertical_step_gives_single_pixel_line() {
        let g = GrayImage::from_fn(16, 10, |x, _| if x < 8 { 0 } else { 255 });
        let m = canny(&g, 40.0, 100.0).unwrap();
        for y in 0..10 {
            let cols: Vec<u32> = (0..16).filter(|&x| m.get(x, y)).collect();
            assert_eq!(cols, vec![7], "row {y}");
        }
    }

    #[test]
    fn high_above_max_magnitude_gives_empty_mask() {
        let g = GrayImage::from_fn(16, 10, |x, _| if x < 8 { 0 } else { 255 });
        assert!(canny(&g, 10.0, 1e6).unwrap().is_empty());
    }

    #[test]
    fn low_above_high_is_rejected() {
        let g = GrayImage::filled(8, 8, 0);
        assert!(matches!(canny(&g, 5.0, 1.0), Err(Error::Parameter(_))));
    }

    proptest! {
        #[test]
        fn edges_have_magnitude_at_least_low(
            pixels in proptest::collection::vec(any::<u8>(), 144),
            low in 0.0f64..200.0, extra in 0.0f64..200.0,
        ) {
            let g = GrayImage::new(12, 12, pixels).unwrap();
            let params = Canny { low, high: low + extra, sigma: 1.0 };
            let (mask, grad) = canny_values(12, 12, &g.to_f64(), &params).unwrap();
            for (i, &on) in mask.data().iter().enumerate() {
                if on {
                    prop_assert!(grad.magnitude[i] >= low);
                }
            }
        }
    }
}
