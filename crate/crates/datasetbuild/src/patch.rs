use geocore::{rasterize_polygon, world_to_pixel, GeoTransform, Polygon, Raster};

/// Pixel window of a `patch_size` patch centered on `centroid`: returns the
/// top-left (col, row) of the window in raster indices. The center cell is
/// the one containing the centroid, so the window spans
/// `row - size/2 ..= row + size/2 - 1`.
pub fn patch_window(r: &Raster, centroid: (f64, f64), patch_size: usize) -> (i64, i64) {
    let (c, rw) = world_to_pixel(&r.transform, centroid.0, centroid.1);
    let col = c.floor() as i64;
    let row = rw.floor() as i64;
    let half = patch_size as i64 / 2;
    (col - half, row - half)
}

/// Extract a `patch_size`^2 patch centered on the building centroid.
/// Cells outside the raster or equal to the nodata value are filled with 0.
pub fn extract_patch(r: &Raster, centroid: (f64, f64), patch_size: usize) -> Vec<f32> {
    debug_assert!(patch_size % 2 == 0, "patch size must be even");
    let (col0, row0) = patch_window(r, centroid, patch_size);
    let mut out = vec![0.0f32; patch_size * patch_size];
    for py in 0..patch_size {
        let row = row0 + py as i64;
        if row < 0 || row >= r.height as i64 {
            continue;
        }
        for px in 0..patch_size {
            let col = col0 + px as i64;
            if col < 0 || col >= r.width as i64 {
                continue;
            }
            let v = r.get(col as usize, row as usize);
            if !r.is_nodata(v) && v.is_finite() {
                out[py * patch_size + px] = v;
            }
        }
    }
    out
}

/// Rasterize the building footprint onto the patch window of the reference
/// raster: the mask aligns cell-for-cell with patches extracted from it.
pub fn extract_mask_patch(
    reference: &Raster,
    footprint: &Polygon,
    centroid: (f64, f64),
    patch_size: usize,
) -> Vec<u8> {
    let (col0, row0) = patch_window(reference, centroid, patch_size);
    let t = &reference.transform;
    let window = GeoTransform::new(
        t.origin_x + col0 as f64 * t.pixel_w,
        t.origin_y - row0 as f64 * t.pixel_h,
        t.pixel_w,
        t.pixel_h,
    );
    rasterize_polygon(footprint, &window, patch_size, patch_size)
}

/// Median-center a patch in place (local relative height for DSM patches).
pub fn subtract_median(patch: &mut [f32]) {
    let mut sorted: Vec<f32> = patch.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite patch values"));
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    patch.iter_mut().for_each(|v| *v -= median);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster_100(vals: impl Fn(usize, usize) -> f32) -> Raster {
        let mut values = Vec::with_capacity(100 * 100);
        for row in 0..100 {
            for col in 0..100 {
                values.push(vals(col, row));
            }
        }
        Raster::new(100, 100, GeoTransform::square(0.0, 100.0, 1.0), None, values).unwrap()
    }

    #[test]
    fn window_arithmetic_centered_at_pixel_50() {
        let r = raster_100(|c, row| (row * 100 + c) as f32);
        // centroid inside pixel (50, 50): center at (50.5, 49.5) in map coords
        let (col0, row0) = patch_window(&r, (50.5, 49.5), 32);
        assert_eq!((col0, row0), (34, 34)); // rows 34..=65, cols 34..=65
        let patch = extract_patch(&r, (50.5, 49.5), 32);
        assert_eq!(patch[0], (34 * 100 + 34) as f32);
        assert_eq!(patch[31 * 32 + 31], (65 * 100 + 65) as f32);
    }

    #[test]
    fn corner_centroid_zero_pads() {
        let r = raster_100(|_, _| 7.0);
        let patch = extract_patch(&r, (0.5, 99.5), 32); // pixel (0, 0)
        // top-left quadrant outside the raster is zero
        assert_eq!(patch[0], 0.0);
        assert_eq!(patch[15 * 32 + 15], 0.0);
        // in-bounds corner keeps values
        assert_eq!(patch[16 * 32 + 16], 7.0);
        assert_eq!(patch[31 * 32 + 31], 7.0);
    }

    #[test]
    fn constant_raster_gives_constant_interior() {
        let r = raster_100(|_, _| 3.25);
        let patch = extract_patch(&r, (50.0, 50.0), 32);
        assert!(patch.iter().all(|&v| v == 3.25));
    }

    #[test]
    fn nodata_cells_become_zero() {
        let mut r = raster_100(|_, _| 2.0);
        r.nodata = Some(-9999.0);
        r.set(50, 50, -9999.0);
        let patch = extract_patch(&r, (50.5, 49.5), 32);
        let n_zero = patch.iter().filter(|&&v| v == 0.0).count();
        assert_eq!(n_zero, 1);
    }

    #[test]
    fn translation_consistency_whole_pixel_shift() {
        let r = raster_100(|c, row| ((row * 31 + c * 17) % 97) as f32);
        let a = extract_patch(&r, (40.3, 60.7), 16);
        // shift both raster origin and centroid by whole pixels
        let mut shifted = r.clone();
        shifted.transform = GeoTransform::square(5.0, 108.0, 1.0);
        let b = extract_patch(&shifted, (45.3, 68.7), 16);
        assert_eq!(a, b);
    }

    #[test]
    fn mask_aligns_with_patch_window() {
        let r = raster_100(|_, _| 0.0);
        let fp = Polygon::rect(45.0, 45.0, 55.0, 55.0);
        let centroid = fp.centroid().unwrap();
        let mask = extract_mask_patch(&r, &fp, centroid, 32);
        // 10x10 m footprint at 1 m/px: exactly 100 cells inside
        assert_eq!(mask.iter().map(|&m| m as usize).sum::<usize>(), 100);
        // and it is centered in the window
        assert_eq!(mask[16 * 32 + 16], 1);
    }

    #[test]
    fn median_centering() {
        let mut p = vec![1.0, 2.0, 100.0, 3.0];
        subtract_median(&mut p);
        assert_eq!(p, vec![-1.5, -0.5, 97.5, 0.5]);
    }
}
