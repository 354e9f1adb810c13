use crate::polygon::Polygon;
use crate::transform::{world_to_pixel, GeoTransform};

/// Rasterize a polygon onto a `w x h` grid under transform `t`.
///
/// A cell is 1 iff its center point lies inside the polygon by the even-odd
/// rule; holes are excluded. Scanline implementation: for each pixel row,
/// intersect all ring edges with the horizontal line through the cell
/// centers and fill between sorted intersection pairs. A cell center `cx`
/// is inside iff the number of intersections strictly left of it is odd,
/// which makes the filled span of a pair `(a, b]`.
pub fn rasterize_polygon(p: &Polygon, t: &GeoTransform, w: usize, h: usize) -> Vec<u8> {
    let mut mask = vec![0u8; w * h];
    if w == 0 || h == 0 {
        return mask;
    }

    // polygon bbox in pixel rows, clamped to the grid
    let (min_x, min_y, _max_x, max_y) = p.bbox();
    let (_, top) = world_to_pixel(t, min_x, max_y);
    let (_, bot) = world_to_pixel(t, min_x, min_y);
    let row_lo = top.floor().max(0.0) as usize;
    let row_hi_f = bot.ceil();
    if row_hi_f < 0.0 || row_lo >= h {
        return mask;
    }
    let row_hi = (row_hi_f as usize).min(h);

    let mut xs: Vec<f64> = Vec::new();
    for row in row_lo..row_hi {
        // scanline through the cell centers of this row, in pixel space
        let cy = row as f64 + 0.5;
        xs.clear();
        for ring in std::iter::once(p.exterior()).chain(p.interiors().iter().map(|r| &r[..])) {
            for seg in ring.windows(2) {
                let (x0, y0) = world_to_pixel(t, seg[0].0, seg[0].1);
                let (x1, y1) = world_to_pixel(t, seg[1].0, seg[1].1);
                if (y0 <= cy) != (y1 <= cy) {
                    let frac = (cy - y0) / (y1 - y0);
                    xs.push(x0 + frac * (x1 - x0));
                }
            }
        }
        if xs.len() < 2 {
            continue;
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in xs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            // centers with a < col + 0.5 <= b
            let mut c0 = (a - 0.5).floor() as i64 + 1;
            let mut c1 = (b - 0.5).floor() as i64;
            // float fixup so the span agrees exactly with the per-center rule
            while c0 as f64 + 0.5 <= a {
                c0 += 1;
            }
            while (c0 - 1) as f64 + 0.5 > a {
                c0 -= 1;
            }
            while c1 as f64 + 0.5 > b {
                c1 -= 1;
            }
            while (c1 + 1) as f64 + 0.5 <= b {
                c1 += 1;
            }
            let start = c0.max(0) as usize;
            let end = ((c1 + 1).max(0) as usize).min(w);
            for col in start..end.max(start) {
                mask[row * w + col] = 1;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::GeoTransform;

    #[test]
    fn square_over_single_pixel() {
        // 1x1 m square centered on the single pixel center (0.5, 0.5)
        let p = Polygon::rect(0.0, 0.0, 1.0, 1.0);
        let t = GeoTransform::square(0.0, 1.0, 1.0);
        assert_eq!(rasterize_polygon(&p, &t, 1, 1), vec![1]);
    }

    #[test]
    fn polygon_outside_grid_is_all_zero() {
        let p = Polygon::rect(100.0, 100.0, 110.0, 110.0);
        let t = GeoTransform::square(0.0, 10.0, 1.0);
        assert!(rasterize_polygon(&p, &t, 10, 10).iter().all(|&m| m == 0));
    }

    #[test]
    fn hole_is_excluded() {
        let p = Polygon::new(
            vec![(0.0, 0.0), (5.0, 0.0), (5.0, 5.0), (0.0, 5.0), (0.0, 0.0)],
            vec![vec![(2.0, 2.0), (3.0, 2.0), (3.0, 3.0), (2.0, 3.0), (2.0, 2.0)]],
        )
        .unwrap();
        let t = GeoTransform::square(0.0, 5.0, 1.0);
        let mask = rasterize_polygon(&p, &t, 5, 5);
        assert_eq!(mask.iter().map(|&m| m as usize).sum::<usize>(), 24);
        assert_eq!(mask[2 * 5 + 2], 0); // center cell is in the hole
    }
}
