use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Geo(#[from] geocore::GeoError),

    #[error("normalization needs at least 2 records, found {0}")]
    TooFewRecords(usize),

    #[error("sample store corrupt: {0}")]
    ManifestMismatch(String),

    #[error("manifest json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
