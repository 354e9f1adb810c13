use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training split contains a single class only")]
    SingleClassTrainSet,

    #[error("loss diverged to a non-finite value at epoch {epoch}, batch {batch}")]
    DivergedLoss { epoch: usize, batch: usize },

    #[error("length mismatch: {labels} labels vs {probs} probabilities")]
    LengthMismatch { labels: usize, probs: usize },

    #[error(transparent)]
    Fusion(#[from] fusionmodel::FusionError),

    #[error(transparent)]
    Eval(#[from] evaluation::EvalError),
}
