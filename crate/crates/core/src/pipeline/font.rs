//! 5×7 bitmap font for uppercase letters and digits.
//!
//! Every glyph is a single 8-connected shape spanning all seven rows, so each
//! rendered character becomes exactly one connected component.

pub const GLYPH_WIDTH: u32 = 5;
pub const GLYPH_HEIGHT: u32 = 7;
/// Horizontal advance per character, in font cells.
pub const ADVANCE: u32 = 6;

const GLYPHS: [(char, [&str; 7]); 36] = [
    ('A', ["01110", "10001", "10001", "10001", "11111", "10001", "10001"]),
    ('B', ["11110", "10001", "10001", "11110", "10001", "10001", "11110"]),
    ('C', ["01110", "10001", "10000", "10000", "10000", "10001", "01110"]),
    ('D', ["11100", "10010", "10001", "10001", "10001", "10010", "11100"]),
    ('E', ["11111", "10000", "10000", "11110", "10000", "10000", "11111"]),
    ('F', ["11111", "10000", "10000", "11110", "10000", "10000", "10000"]),
    ('G', ["01110", "10001", "10000", "10111", "10001", "10001", "01111"]),
    ('H', ["10001", "10001", "10001", "11111", "10001", "10001", "10001"]),
    ('I', ["01110", "00100", "00100", "00100", "00100", "00100", "01110"]),
    ('J', ["00111", "00010", "00010", "00010", "00010", "10010", "01100"]),
    ('K', ["10001", "10010", "10100", "11000", "10100", "10010", "10001"]),
    ('L', ["10000", "10000", "10000", "10000", "10000", "10000", "11111"]),
    ('M', ["10001", "11011", "10101", "10101", "10001", "10001", "10001"]),
    ('N', ["10001", "10001", "11001", "10101", "10011", "10001", "10001"]),
    ('O', ["01110", "10001", "10001", "10001", "10001", "10001", "01110"]),
    ('P', ["11110", "10001", "10001", "11110", "10000", "10000", "10000"]),
    ('Q', ["01110", "10001", "10001", "10001", "10101", "10010", "01101"]),
    ('R', ["11110", "10001", "10001", "11110", "10100", "10010", "10001"]),
    ('S', ["01111", "10000", "10000", "01110", "00001", "00001", "11110"]),
    ('T', ["11111", "00100", "00100", "00100", "00100", "00100", "00100"]),
    ('U', ["10001", "10001", "10001", "10001", "10001", "10001", "01110"]),
    ('V', ["10001", "10001", "10001", "10001", "10001", "01010", "00100"]),
    ('W', ["10001", "10001", "10001", "10101", "10101", "10101", "01010"]),
    ('X', ["10001", "10001", "01010", "00100", "01010", "10001", "10001"]),
    ('Y', ["10001", "10001", "10001", "01010", "00100", "00100", "00100"]),
    ('Z', ["11111", "00001", "00010", "00100", "01000", "10000", "11111"]),
    ('0', ["01110", "10001", "10011", "10101", "11001", "10001", "01110"]),
    ('1', ["00100", "01100", "00100", "00100", "00100", "00100", "01110"]),
    ('2', ["01110", "10001", "00001", "00010", "00100", "01000", "11111"]),
    ('3', ["11111", "00010", "00100", "00010", "00001", "10001", "01110"]),
    ('4', ["00010", "00110", "01010", "10010", "11111", "00010", "00010"]),
    ('5', ["11111", "10000", "11110", "00001", "00001", "10001", "01110"]),
    ('6', ["00110", "01000", "10000", "11110", "10001", "10001", "01110"]),
    ('7', ["11111", "00001", "00010", "00100", "01000", "01000", "01000"]),
    ('8', ["01110", "10001", "10001", "01110", "10001", "10001", "01110"]),
    ('9', ["01110", "10001", "10001", "01111", "00001", "00010", "01100"]),
];

/// The characters the font can draw, in table order.
pub fn charset() -> impl Iterator<Item = char> {
    GLYPHS.iter().map(|(c, _)| *c)
}

pub fn has_glyph(c: char) -> bool {
    GLYPHS.iter().any(|(g, _)| *g == c)
}

/// Cell `(col, row)` of the glyph for `c`; `None` if the font lacks `c`.
pub fn glyph_cell(c: char, col: u32, row: u32) -> Option<bool> {
    let (_, rows) = GLYPHS.iter().find(|(g, _)| *g == c)?;
    Some(rows[row as usize].as_bytes()[col as usize] == b'1')
}

/// Glyph bitmap trimmed to its inked columns, row-major, plus its width.
pub fn trimmed_glyph(c: char) -> Option<(u32, Vec<bool>)> {
    let inked = |col: u32| (0..GLYPH_HEIGHT).any(|r| glyph_cell(c, col, r) == Some(true));
    let first = (0..GLYPH_WIDTH).find(|&col| inked(col))?;
    let last = (0..GLYPH_WIDTH).rev().find(|&col| inked(col))?;
    let w = last - first + 1;
    let mut bits = Vec::with_capacity((w * GLYPH_HEIGHT) as usize);
    for r in 0..GLYPH_HEIGHT {
        for col in first..=last {
            bits.push(glyph_cell(c, col, r)?);
        }
    }
    Some((w, bits))
}

/// Rendered size of `text` at `scale`, before trimming blank glyph columns.
pub fn text_size(text: &str, scale: u32) -> (u32, u32) {
    let n = text.chars().count() as u32;
    if n == 0 {
        return (0, 0);
    }
    ((n * ADVANCE - 1) * scale, GLYPH_HEIGHT * scale)
}

/// Calls `plot(x, y)` for every ink pixel of `text` drawn at `(x0, y0)`.
/// Spaces advance the pen; other unknown characters are skipped the same way.
pub fn render(text: &str, scale: u32, x0: u32, y0: u32, mut plot: impl FnMut(u32, u32)) {
    for (i, c) in text.chars().enumerate() {
        let gx = x0 + i as u32 * ADVANCE * scale;
        if !has_glyph(c) {
            continue;
        }
        for row in 0..GLYPH_HEIGHT {
            for col in 0..GLYPH_WIDTH {
                if glyph_cell(c, col, row) == Some(true) {
                    for dy in 0..scale {
                        for dx in 0..scale {
                            plot(gx + col * scale + dx, y0 + row * scale + dy);
                        }
                    }
                }
            }
        }
    }
}

/// Tight box around the ink of `text` drawn at `(x0, y0)`.
pub fn ink_bounds(text: &str, scale: u32, x0: u32, y0: u32) -> Option<crate::imaging::Rect> {
    let (mut x_min, mut x_max) = (u32::MAX, 0);
    let mut any = false;
    render(text, scale, x0, y0, |x, _| {
        any = true;
        x_min = x_min.min(x);
        x_max = x_max.max(x);
    });
    any.then(|| crate::imaging::Rect::new(x_min, y0, x_max - x_min + 1, GLYPH_HEIGHT * scale))
}
