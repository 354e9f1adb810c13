//! Late-fusion multimodal classifier: per-modality residual encoders for
//! the SAR, footprint-mask, and DSM patches, an MLP for the tabular
//! exposure vector, concatenation in fixed modality order, and a two-layer
//! classification head ending in a sigmoid damage probability.

mod config;
mod error;
mod model;

pub use config::{FusionConfig, Modality};
pub use error::FusionError;
pub use model::{fuse, Batch, FusionActivations, FusionModel};
