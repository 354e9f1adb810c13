use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation set contains a single class only")]
    SingleClassEvalSet,

    #[error("confusion matrix has zero total count")]
    EmptyConfusion,

    #[error("too few {class} records for {k} folds: have {have}")]
    TooFewPerClass {
        class: &'static str,
        k: usize,
        have: usize,
    },

    #[error("leave-one-city-out requires at least 2 cities, found {0}")]
    SingleCity(usize),

    #[error("need at least {need} fold reports to aggregate, found {found}")]
    TooFewReports { need: usize, found: usize },

    #[error("length mismatch: {left} labels vs {right} scores")]
    LengthMismatch { left: usize, right: usize },
}
