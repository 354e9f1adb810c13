use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::metrics::{auroc, cohen_kappa, pr_best_f1_threshold, Confusion};

/// A scored building at evaluation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub building_id: String,
    pub city: String,
    pub score: f64,
    pub label: u8,
}

/// Full metric set for one evaluation: threshold-dependent metrics at the
/// best-F1 point plus threshold-independent AUROC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: f64,
    pub auroc: f64,
}

/// Compute the report for one prediction set.
pub fn evaluate(preds: &[PredictionRecord]) -> Result<EvalReport, EvalError> {
    let best = pr_best_f1_threshold(preds)?;
    let kappa = cohen_kappa(&best.confusion)?;
    let auc = auroc(preds)?;
    Ok(EvalReport {
        threshold: best.threshold,
        confusion: best.confusion,
        precision: best.precision,
        recall: best.recall,
        f1: best.f1,
        kappa,
        auroc: auc,
    })
}

/// Mean and sample standard deviation of one metric across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

impl fmt::Display for MetricSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} \u{b1} {:.3}", self.mean, self.std)
    }
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    MetricSummary { mean, std: var.sqrt() }
}

/// Per-metric mean +/- sample std across fold reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAggregate {
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
    pub auroc: MetricSummary,
    pub kappa: MetricSummary,
}

impl FoldAggregate {
    pub fn table(&self) -> String {
        format!(
            "precision {}\nrecall    {}\nf1        {}\nauroc     {}\nkappa     {}\n",
            self.precision, self.recall, self.f1, self.auroc, self.kappa
        )
    }
}

/// Aggregate at least two fold reports into mean +/- sample std per metric.
pub fn aggregate_folds(reports: &[EvalReport]) -> Result<FoldAggregate, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::TooFewReports { need: 2, found: reports.len() });
    }
    let col = |f: fn(&EvalReport) -> f64| -> Vec<f64> { reports.iter().map(f).collect() };
    Ok(FoldAggregate {
        precision: summarize(&col(|r| r.precision)),
        recall: summarize(&col(|r| r.recall)),
        f1: summarize(&col(|r| r.f1)),
        auroc: summarize(&col(|r| r.auroc)),
        kappa: summarize(&col(|r| r.kappa)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with_f1(f1: f64) -> EvalReport {
        EvalReport {
            threshold: 0.5,
            confusion: Confusion { tp: 1, fp: 1, fnc: 1, tn: 1 },
            precision: f1,
            recall: f1,
            f1,
            kappa: f1,
            auroc: f1,
        }
    }

    #[test]
    fn identical_reports_have_zero_std() {
        let reports = vec![report_with_f1(0.7); 5];
        let agg = aggregate_folds(&reports).unwrap();
        assert_eq!(agg.f1.mean, 0.7);
        assert_eq!(agg.f1.std, 0.0);
    }

    #[test]
    fn hand_computed_mean_and_sample_std() {
        let reports: Vec<EvalReport> =
            [0.88, 0.89, 0.89, 0.88, 0.89].iter().map(|&v| report_with_f1(v)).collect();
        let agg = aggregate_folds(&reports).unwrap();
        assert!((agg.f1.mean - 0.886).abs() < 1e-12);
        assert!((agg.f1.std - 0.005477225575051678).abs() < 1e-12);
        assert_eq!(format!("{}", agg.f1), "0.886 \u{b1} 0.005");
    }

    #[test]
    fn aggregation_is_permutation_invariant() {
        let a: Vec<EvalReport> = [0.1, 0.5, 0.9].iter().map(|&v| report_with_f1(v)).collect();
        let b: Vec<EvalReport> = [0.9, 0.1, 0.5].iter().map(|&v| report_with_f1(v)).collect();
        let agg_a = aggregate_folds(&a).unwrap();
        let agg_b = aggregate_folds(&b).unwrap();
        assert!((agg_a.f1.mean - agg_b.f1.mean).abs() < 1e-15);
        assert!((agg_a.f1.std - agg_b.f1.std).abs() < 1e-15);
    }

    #[test]
    fn single_report_cannot_aggregate() {
        let reports = vec![report_with_f1(0.5)];
        assert!(matches!(aggregate_folds(&reports), Err(EvalError::TooFewReports { .. })));
    }
}
