//! Minimal OCR engine for the built-in 5×7 font, usable as an OCR command:
//! `glyph-ocr {input}`. Reads a PGM with dark ink on a light background and
//! prints the recognized lines.

use std::process::ExitCode;

use labelreader::imaging::{connected_components, pnm, BinaryMask, Component, Connectivity, GrayImage};
use labelreader::pipeline::font::{self, GLYPH_HEIGHT};

/// Glyph whose bitmap best matches the component's sampled cells.
fn classify(ink: &BinaryMask, c: &Component) -> char {
    let b = c.bbox;
    let cols_seen = (b.w as f64 * GLYPH_HEIGHT as f64 / b.h as f64).round() as i64;
    let mut best = ('?', u32::MAX);
    for ch in font::charset() {
        let (gw, bits) = font::trimmed_glyph(ch).expect("charset glyphs exist");
        let mut cost = 3 * (gw as i64 - cols_seen).unsigned_abs() as u32;
        for r in 0..GLYPH_HEIGHT {
            for col in 0..gw {
                let x = b.x + ((col as f64 + 0.5) * b.w as f64 / gw as f64) as u32;
                let y = b.y + ((r as f64 + 0.5) * b.h as f64 / GLYPH_HEIGHT as f64) as u32;
                if ink.get(x, y) != bits[(r * gw + col) as usize] {
                    cost += 1;
                }
            }
        }
        if cost < best.1 {
            best = (ch, cost);
        }
    }
    best.0
}

fn recognize(img: &GrayImage) -> String {
    let ink = BinaryMask::from_fn(img.width(), img.height(), |x, y| img.get(x, y) < 128);
    let comps = connected_components(&ink, Connectivity::Eight);
    let tallest = comps.iter().map(|c| c.bbox.h).max().unwrap_or(0);
    let mut glyphs: Vec<&Component> = comps.iter().filter(|c| c.bbox.h * 2 >= tallest && c.bbox.h >= GLYPH_HEIGHT).collect();
    glyphs.sort_by_key(|c| (c.bbox.y, c.bbox.x));

    // group into lines by vertical overlap
    let mut lines: Vec<Vec<&Component>> = Vec::new();
    for g in glyphs {
        let line = lines.iter_mut().find(|l| {
            let (top, bottom) = (l[0].bbox.y, l[0].bbox.bottom());
            let overlap = bottom.min(g.bbox.bottom()).saturating_sub(top.max(g.bbox.y));
            2 * overlap >= g.bbox.h.min(bottom - top)
        });
        match line {
            Some(l) => l.push(g),
            None => lines.push(vec![g]),
        }
    }

    let mut out = Vec::new();
    for mut line in lines {
        line.sort_by_key(|c| c.bbox.x);
        let mut text = String::new();
        for (i, c) in line.iter().enumerate() {
            if i > 0 {
                let prev = line[i - 1].bbox;
                let scale = (c.bbox.h as f64 / GLYPH_HEIGHT as f64).max(1.0);
                if (c.bbox.x.saturating_sub(prev.right())) as f64 >= 5.0 * scale {
                    text.push(' ');
                }
            }
            text.push(classify(&ink, c));
        }
        out.push(text);
    }
    out.join("\n")
}

fn main() -> ExitCode {
    let Some(path) = std::env::args_os().nth(1) else {
        eprintln!("usage: glyph-ocr <image.pgm>");
        return ExitCode::from(2);
    };
    match pnm::read_pgm(&path) {
        Ok(img) => {
            println!("{}", recognize(&img));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("glyph-ocr: {e}");
            ExitCode::from(1)
        }
    }
}
