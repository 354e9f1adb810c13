//! Mini-batch training of the fusion model: binary cross-entropy objective,
//! seeded shuffling, validation-F1 model selection with early stopping.

mod error;
mod loss;
mod loop_;

pub use error::TrainError;
pub use loss::{bce_loss, bce_logit_gradient};
pub use loop_::{score_samples, train, TrainConfig, TrainingStats};
