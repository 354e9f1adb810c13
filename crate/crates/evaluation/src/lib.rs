//! Metrics, threshold selection, and split generation for binary damage
//! classification. All metrics are computed with respect to the positive
//! (damaged) class.

mod error;
mod metrics;
mod report;
mod splits;

pub use error::EvalError;
pub use metrics::{auroc, cohen_kappa, pr_best_f1_threshold, Confusion, ThresholdMetrics};
pub use report::{aggregate_folds, evaluate, EvalReport, FoldAggregate, MetricSummary, PredictionRecord};
pub use splits::{leave_one_city_out, stratified_kfold, CitySplit};
