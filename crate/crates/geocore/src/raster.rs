use crate::error::GeoError;
use crate::transform::GeoTransform;

/// Georeferenced single-band grid of f32 values, row-major with row 0 at
/// the northern edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub transform: GeoTransform,
    pub nodata: Option<f32>,
    pub values: Vec<f32>,
}

impl Raster {
    pub fn new(
        width: usize,
        height: usize,
        transform: GeoTransform,
        nodata: Option<f32>,
        values: Vec<f32>,
    ) -> Result<Self, GeoError> {
        if values.len() != width * height {
            return Err(GeoError::DimensionMismatch {
                expected: width * height,
                found: values.len(),
            });
        }
        Ok(Raster {
            width,
            height,
            transform,
            nodata,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, transform: GeoTransform, value: f32) -> Self {
        Raster {
            width,
            height,
            transform,
            nodata: None,
            values: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f32 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, v: f32) {
        self.values[row * self.width + col] = v;
    }

    #[inline]
    pub fn is_nodata(&self, v: f32) -> bool {
        match self.nodata {
            Some(nd) => v == nd,
            None => false,
        }
    }
}
