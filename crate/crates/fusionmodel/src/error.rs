use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("modality {modality} enabled but sample field is unusable: {detail}")]
    MissingModality { modality: String, detail: String },

    #[error("fusion config: {0}")]
    Config(String),

    #[error(transparent)]
    Net(#[from] neuralnet::NetError),
}
