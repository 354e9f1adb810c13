use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("checkpoint checksum mismatch (corrupt or truncated file)")]
    ChecksumMismatch,

    #[error("checkpoint config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl NetError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        NetError::ShapeMismatch { op, detail: detail.into() }
    }
}
