use serde::{Deserialize, Serialize};

/// Affine mapping between pixel indices and map coordinates.
///
/// `(origin_x, origin_y)` is the map position of the raster's top-left
/// corner. `pixel_h` is stored positive; row indices increase southward.
/// Integer pixel coordinates land on cell corners, so the center of cell
/// `(col, row)` maps to continuous coordinates `(col + 0.5, row + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub origin_x: f64,
    pub origin_y: f64,
    pub pixel_w: f64,
    pub pixel_h: f64,
}

impl GeoTransform {
    pub fn new(origin_x: f64, origin_y: f64, pixel_w: f64, pixel_h: f64) -> Self {
        assert!(pixel_w > 0.0 && pixel_h > 0.0, "pixel sizes must be positive");
        GeoTransform {
            origin_x,
            origin_y,
            pixel_w,
            pixel_h,
        }
    }

    /// Square-pixel transform, the common case for our rasters.
    pub fn square(origin_x: f64, origin_y: f64, cellsize: f64) -> Self {
        Self::new(origin_x, origin_y, cellsize, cellsize)
    }
}

/// Map coordinates to continuous pixel coordinates.
pub fn world_to_pixel(t: &GeoTransform, x: f64, y: f64) -> (f64, f64) {
    ((x - t.origin_x) / t.pixel_w, (t.origin_y - y) / t.pixel_h)
}

/// Continuous pixel coordinates back to map coordinates.
pub fn pixel_to_world(t: &GeoTransform, col: f64, row: f64) -> (f64, f64) {
    (t.origin_x + col * t.pixel_w, t.origin_y - row * t.pixel_h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_transform_origin() {
        let t = GeoTransform::square(0.0, 0.0, 1.0);
        assert_eq!(world_to_pixel(&t, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn forced_arithmetic() {
        let t = GeoTransform::square(0.0, 100.0, 2.5);
        assert_eq!(world_to_pixel(&t, 25.0, 75.0), (10.0, 10.0));
    }

    #[test]
    fn inverse_at_pixel_center() {
        let t = GeoTransform::square(310.0, 4200.0, 2.5);
        let (x, y) = pixel_to_world(&t, 3.5, 7.5);
        let (c, r) = world_to_pixel(&t, x, y);
        assert!((c - 3.5).abs() < 1e-9 && (r - 7.5).abs() < 1e-9);
    }
}
