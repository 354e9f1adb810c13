use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::report::PredictionRecord;

/// Binary confusion counts for the positive (damaged) class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fnc: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fnc + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fnc)
    }

    /// F1 = 2PR/(P+R), defined as 0 when P + R = 0.
    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    /// Count predictions at decision rule `score >= threshold`.
    pub fn at_threshold(preds: &[PredictionRecord], threshold: f64) -> Confusion {
        let mut c = Confusion { tp: 0, fp: 0, fnc: 0, tn: 0 };
        for p in preds {
            let predicted = p.score >= threshold;
            match (predicted, p.label == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fnc += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Threshold-dependent metrics at the F1-maximizing point of the
/// precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// Sweep every distinct score as a candidate threshold (decision rule:
/// positive iff score >= t, with +inf as the predict-nothing endpoint) and
/// return the F1-maximizing one. Ties break toward the largest threshold.
pub fn pr_best_f1_threshold(preds: &[PredictionRecord]) -> Result<ThresholdMetrics, EvalError> {
    let pos_total = preds.iter().filter(|p| p.label == 1).count();
    let neg_total = preds.len() - pos_total;
    if pos_total == 0 || neg_total == 0 {
        return Err(EvalError::SingleClassEvalSet);
    }

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .score
            .partial_cmp(&preds[a].score)
            .expect("scores must be finite")
    });

    // +inf endpoint: nothing predicted positive
    let mut best = ThresholdMetrics {
        threshold: f64::INFINITY,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        confusion: Confusion { tp: 0, fp: 0, fnc: pos_total, tn: neg_total },
    };

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0usize;
    while i < order.len() {
        let t = preds[order[i]].score;
        // absorb the whole tie group: the threshold t includes all of them
        while i < order.len() && preds[order[i]].score == t {
            if preds[order[i]].label == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let c = Confusion { tp, fp, fnc: pos_total - tp, tn: neg_total - fp };
        let f1 = c.f1();
        // strict > keeps the largest threshold on ties (scan is descending)
        if f1 > best.f1 {
            best = ThresholdMetrics {
                threshold: t,
                precision: c.precision(),
                recall: c.recall(),
                f1,
                confusion: c,
            };
        }
    }
    Ok(best)
}

/// Area under the ROC curve via the rank-sum (Mann-Whitney) estimator with
/// midrank tie handling; equal to trapezoidal ROC integration.
pub fn auroc(preds: &[PredictionRecord]) -> Result<f64, EvalError> {
    let pos = preds.iter().filter(|p| p.label == 1).count();
    let neg = preds.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClassEvalSet);
    }

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[a]
            .score
            .partial_cmp(&preds[b].score)
            .expect("scores must be finite")
    });

    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < order.len() {
        let s = preds[order[i]].score;
        let mut j = i;
        let mut group_pos = 0usize;
        while j < order.len() && preds[order[j]].score == s {
            if preds[order[j]].label == 1 {
                group_pos += 1;
            }
            j += 1;
        }
        // ranks i+1 ..= j share the midrank
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum_pos += midrank * group_pos as f64;
        i = j;
    }
    let u = rank_sum_pos - (pos as f64 * (pos as f64 + 1.0)) / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// Cohen's kappa from a confusion matrix. When expected agreement is 1
/// (a degenerate marginal), kappa is 1 for perfect observed agreement and
/// 0 otherwise.
pub fn cohen_kappa(c: &Confusion) -> Result<f64, EvalError> {
    let n = c.total();
    if n == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let n = n as f64;
    let po = (c.tp + c.tn) as f64 / n;
    let pred_pos = (c.tp + c.fp) as f64 / n;
    let actual_pos = (c.tp + c.fnc) as f64 / n;
    let pe = pred_pos * actual_pos + (1.0 - pred_pos) * (1.0 - actual_pos);
    if pe == 1.0 {
        return Ok(if po == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((po - pe) / (1.0 - pe))
}
