use super::{BinaryMask, Rect};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub pixel_count: usize,
    pub bbox: Rect,
    pub pixels: Vec<(u32, u32)>,
}

/// Labels the foreground of `m`. Output is sorted by pixel count descending,
/// ties broken by bbox top then left.
pub fn connected_components(m: &BinaryMask, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (m.width() as i64, m.height() as i64);
    let mut seen = vec![false; m.data().len()];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    const N4: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    const N8: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
    let neighbours: &[(i64, i64)] = match connectivity {
        Connectivity::Four => &N4,
        Connectivity::Eight => &N8,
    };

    for start in 0..m.data().len() {
        if seen[start] || !m.data()[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut pixels = Vec::new();
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i as i64 % w) as u32, (i as i64 / w) as u32);
            pixels.push((x, y));
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for &(dx, dy) in neighbours {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if !seen[j] && m.data()[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        out.push(Component {
            pixel_count: pixels.len(),
            bbox: Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
            pixels,
        });
    }
    out.sort_by(|a, b| {
        b.pixel_count
            .cmp(&a.pixel_count)
            .then(a.bbox.y.cmp(&b.bbox.y))
            .then(a.bbox.x.cmp(&b.bbox.x))
    });
    out
}
