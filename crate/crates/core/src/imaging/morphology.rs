use super::BinaryMask;

fn filter3x3(m: &BinaryMask, want_any: bool) -> BinaryMask {
    let (w, h) = (m.width() as i64, m.height() as i64);
    BinaryMask::from_fn(m.width(), m.height(), |x, y| {
        let mut hits = 0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let nx = (x as i64 + dx).clamp(0, w - 1) as u32;
                let ny = (y as i64 + dy).clamp(0, h - 1) as u32;
                hits += m.get(nx, ny) as u32;
            }
        }
        if want_any {
            hits > 0
        } else {
            hits == 9
        }
    })
}

pub fn dilate3x3(m: &BinaryMask) -> BinaryMask {
    filter3x3(m, true)
}

pub fn erode3x3(m: &BinaryMask) -> BinaryMask {
    filter3x3(m, false)
}

/// One iteration of 3x3 closing (dilate then erode), computed on a
/// background-padded copy so blobs near the border do not grow.
pub fn close3x3(m: &BinaryMask) -> BinaryMask {
    let (w, h) = (m.width(), m.height());
    let padded = BinaryMask::from_fn(w + 2, h + 2, |x, y| {
        x >= 1 && y >= 1 && x <= w && y <= h && m.get(x - 1, y - 1)
    });
    let closed = erode3x3(&dilate3x3(&padded));
    BinaryMask::from_fn(w, h, |x, y| closed.get(x + 1, y + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closing_fills_single_pixel_holes() {
        let m = BinaryMask::from_fn(7, 7, |x, y| (1..6).contains(&x) && (1..6).contains(&y) && !(x == 3 && y == 3));
        let c = close3x3(&m);
        assert!(c.get(3, 3));
        assert_eq!(c.count(), 25);
    }

    #[test]
    fn closing_keeps_solid_block() {
        let m = BinaryMask::from_fn(10, 10, |x, y| (2..6).contains(&x) && (3..7).contains(&y));
        assert_eq!(close3x3(&m), m);
    }
}
