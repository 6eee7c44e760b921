//! Binary netpbm I/O: P6 for color frames, P5 for grayscale images and masks.

use std::fs;
use std::path::Path;

use super::{to_grayscale, BinaryMask, Frame, GrayImage};
use crate::error::{Error, Result};

/// A decoded netpbm image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pnm {
    Color(Frame),
    Gray(GrayImage),
}

impl Pnm {
    pub fn into_frame(self) -> Frame {
        match self {
            Pnm::Color(f) => f,
            Pnm::Gray(g) => {
                let data = g.data().iter().flat_map(|&v| [v, v, v]).collect();
                Frame::new(g.width(), g.height(), data).expect("gray image is non-empty")
            }
        }
    }

    pub fn into_gray(self) -> GrayImage {
        match self {
            Pnm::Color(f) => to_grayscale(&f),
            Pnm::Gray(g) => g,
        }
    }
}

struct Header {
    magic: [u8; 2],
    width: u32,
    height: u32,
    maxval: u32,
    offset: usize,
}

fn parse_header(bytes: &[u8], name: &str) -> Result<Header> {
    let err = |msg: &str| Error::parse(name, msg);
    if bytes.len() < 2 || bytes[0] != b'P' || !matches!(bytes[1], b'5' | b'6') {
        return Err(err("not a binary PGM/PPM (expected P5 or P6)"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(err("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(err("expected a number in header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("header number out of range"))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|c| c.is_ascii_whitespace()) {
        return Err(err("missing whitespace after maxval"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(err("zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(err("only 8-bit images (maxval 1..=255) are supported"));
    }
    Ok(Header { magic: [bytes[0], bytes[1]], width, height, maxval, offset: pos + 1 })
}

pub fn decode(bytes: &[u8], name: &str) -> Result<Pnm> {
    let h = parse_header(bytes, name)?;
    let channels = if h.magic[1] == b'6' { 3 } else { 1 };
    let len = h.width as usize * h.height as usize * channels;
    let raster = bytes
        .get(h.offset..h.offset + len)
        .ok_or_else(|| Error::parse(name, format!("raster truncated: need {len} bytes")))?;
    let data: Vec<u8> = if h.maxval == 255 {
        raster.to_vec()
    } else {
        raster.iter().map(|&v| ((v as u32 * 255 + h.maxval / 2) / h.maxval).min(255) as u8).collect()
    };
    if channels == 3 {
        Ok(Pnm::Color(Frame::new(h.width, h.height, data)?))
    } else {
        Ok(Pnm::Gray(GrayImage::new(h.width, h.height, data)?))
    }
}

pub fn read(path: impl AsRef<Path>) -> Result<Pnm> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, &path.display().to_string())
}

/// Reads a frame; grayscale files are expanded to RGB.
pub fn read_ppm(path: impl AsRef<Path>) -> Result<Frame> {
    read(path).map(Pnm::into_frame)
}

/// Reads a grayscale image; color files are converted with BT.601 weights.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    read(path).map(Pnm::into_gray)
}

pub fn encode_ppm(f: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", f.width(), f.height()).into_bytes();
    out.extend_from_slice(f.data());
    out
}

pub fn encode_pgm(g: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", g.width(), g.height()).into_bytes();
    out.extend_from_slice(g.data());
    out
}

pub fn write_ppm(path: impl AsRef<Path>, f: &Frame) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(f)).map_err(|e| Error::io(path, e))
}

pub fn write_pgm(path: impl AsRef<Path>, g: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(g)).map_err(|e| Error::io(path, e))
}

/// Masks are stored as P5 with 0 = background, 255 = foreground.
pub fn write_mask(path: impl AsRef<Path>, m: &BinaryMask) -> Result<()> {
    write_pgm(path, &m.to_gray())
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let g = read_pgm(path)?;
    BinaryMask::from_vec(g.width(), g.height(), g.data().iter().map(|&v| v >= 128).collect())
}
