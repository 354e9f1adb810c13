//! Geometry and raster primitives for the building-damage toolkit.
//!
//! Everything here operates in a single shared planar CRS with coordinates
//! in meters. There is no reprojection: inputs are expected to be
//! co-registered upstream. Geometry math runs in f64; raster cell values
//! are f32.
//!
//! Interchange formats:
//! - ESRI ASCII grid rasters ([`read_ascii_grid`] / [`write_ascii_grid`])
//! - a GeoJSON FeatureCollection subset restricted to Polygon/MultiPolygon
//!   ([`read_feature_collection`])
//! - CSV point tables with `x,y` plus numeric attribute columns
//!   ([`read_point_table`])
//!
//! All operations are pure functions over immutable inputs.

mod ascii_grid;
mod error;
mod geojson;
mod point_table;
mod polygon;
mod raster;
mod rasterize;
mod transform;

pub use ascii_grid::{read_ascii_grid, write_ascii_grid};
pub use error::GeoError;
pub use geojson::{read_feature_collection, write_feature_collection, Feature};
pub use point_table::{nearest_point, read_point_table, write_point_table, PointRecord, PointTable};
pub use polygon::{polygon_intersection_area, Polygon};
pub use raster::Raster;
pub use rasterize::rasterize_polygon;
pub use transform::{pixel_to_world, world_to_pixel, GeoTransform};
