use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("degenerate polygon: |area| below 1e-12 m^2")]
    DegeneratePolygon,

    #[error("invalid polygon ring: {0}")]
    InvalidRing(String),

    #[error("point table is empty")]
    EmptyTable,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected} cells, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported geometry type: {0}")]
    UnsupportedGeometry(String),

    #[error("ASCII grid requires square pixels, got {w} x {h} m")]
    NonSquarePixel { w: f64, h: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl GeoError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        GeoError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
