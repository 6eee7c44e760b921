//! Pixel-level primitives shared by every pipeline stage.
//!
//! Images are row-major. Convolutions sample outside the image by
//! replicating the nearest edge pixel, so derived maps keep the input's
//! dimensions.

mod canny;
mod components;
mod gradient;
mod morphology;
pub mod pnm;
mod rect;

pub use canny::{canny, Canny};
pub use components::{connected_components, Component, Connectivity};
pub use gradient::{sobel, GradientField};
pub use morphology::{close3x3, dilate3x3, erode3x3};
pub use rect::Rect;

pub(crate) use canny::canny_values;
pub(crate) use gradient::sobel_values;

use crate::error::{Error, Result};

/// An RGB frame, 8 bits per channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("frame must be at least 1x1, got {width}x{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "frame {width}x{height} needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Frame { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame must be non-empty");
        let data = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Frame { width, height, data }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame must be non-empty");
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Frame { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn crop(&self, r: Rect) -> Result<Frame> {
        check_crop(r, self.width, self.height)?;
        let mut data = Vec::with_capacity(r.area() as usize * 3);
        for y in r.y..r.bottom() {
            let start = (y as usize * self.width as usize + r.x as usize) * 3;
            data.extend_from_slice(&self.data[start..start + r.w as usize * 3]);
        }
        Ok(Frame { width: r.w, height: r.h, data })
    }
}

/// 8-bit luminance image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "gray image {width}x{height} needs {} bytes, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        GrayImage { width, height, data: vec![value; width as usize * height as usize] }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn crop(&self, r: Rect) -> Result<GrayImage> {
        check_crop(r, self.width, self.height)?;
        let mut data = Vec::with_capacity(r.area() as usize);
        for y in r.y..r.bottom() {
            let start = y as usize * self.width as usize + r.x as usize;
            data.extend_from_slice(&self.data[start..start + r.w as usize]);
        }
        Ok(GrayImage { width: r.w, height: r.h, data })
    }

    pub fn transpose(&self) -> GrayImage {
        GrayImage::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Values as f64, the representation the feature stages work in.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }
}

/// One boolean per pixel; `true` is foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryMask { width, height, data: vec![false; width as usize * height as usize] }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "mask {width}x{height} needs {} entries, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        Ok(BinaryMask { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        BinaryMask { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn crop(&self, r: Rect) -> Result<BinaryMask> {
        check_crop(r, self.width, self.height)?;
        Ok(BinaryMask::from_fn(r.w, r.h, |x, y| self.get(r.x + x, r.y + y)))
    }

    /// 0 for background, 255 for foreground.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

fn check_crop(r: Rect, width: u32, height: u32) -> Result<()> {
    if r.is_empty() || r.right() > width || r.bottom() > height {
        return Err(Error::Dimension(format!("crop {r:?} outside {width}x{height} image")));
    }
    Ok(())
}

/// BT.601 luminance of one RGB pixel.
pub fn luminance(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    y.round().clamp(0.0, 255.0) as u8
}

pub fn to_grayscale(f: &Frame) -> GrayImage {
    let data = f.data.chunks_exact(3).map(|p| luminance([p[0], p[1], p[2]])).collect();
    GrayImage { width: f.width, height: f.height, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grayscale_examples() {
        assert_eq!(luminance([100, 100, 100]), 100);
        assert_eq!(luminance([0, 0, 0]), 0);
        assert_eq!(luminance([255, 0, 0]), 76);
        assert_eq!(luminance([255, 255, 255]), 255);
    }

    #[test]
    fn frame_rejects_bad_lengths() {
        assert!(Frame::new(2, 2, vec![0; 11]).is_err());
        assert!(Frame::new(0, 2, vec![]).is_err());
        assert!(Frame::new(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn crop_copies_the_window() {
        let f = Frame::from_fn(4, 3, |x, y| [x as u8, y as u8, 0]);
        let c = f.crop(Rect::new(1, 1, 2, 2)).unwrap();
        assert_eq!(c.pixel(0, 0), [1, 1, 0]);
        assert_eq!(c.pixel(1, 1), [2, 2, 0]);
        assert!(f.crop(Rect::new(3, 0, 2, 1)).is_err());
    }

    proptest! {
        #[test]
        fn grayscale_is_idempotent_on_gray(v in 0u8..=255) {
            let g = luminance([v, v, v]);
            prop_assert_eq!(g, v);
            prop_assert_eq!(luminance([g, g, g]), g);
        }
    }
}
