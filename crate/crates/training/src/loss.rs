use crate::error::TrainError;

/// Binary cross-entropy over a batch, computed in f64:
/// L = -(1/N) sum [ w*y*ln(p) + (1-y)*ln(1-p) ], with probabilities clamped
/// to [eps, 1-eps] before the logs and w = pos_weight (default 1).
pub fn bce_loss(
    labels: &[u8],
    probs: &[f64],
    pos_weight: Option<f64>,
    eps: f64,
) -> Result<f64, TrainError> {
    if labels.len() != probs.len() {
        return Err(TrainError::LengthMismatch { labels: labels.len(), probs: probs.len() });
    }
    debug_assert!(eps > 0.0 && eps < 0.1);
    let w = pos_weight.unwrap_or(1.0);
    let n = labels.len() as f64;
    let mut sum = 0.0f64;
    for (&y, &p) in labels.iter().zip(probs) {
        let p = p.clamp(eps, 1.0 - eps);
        if y == 1 {
            sum += w * p.ln();
        } else {
            sum += (1.0 - p).ln();
        }
    }
    Ok(-sum / n)
}

/// Gradient of bce_loss(sigmoid(z)) with respect to the logit z, per
/// sample: (1/N) * [ (1-y)*p - w*y*(1-p) ]. With w = 1 this is (p - y)/N.
pub fn bce_logit_gradient(labels: &[u8], probs: &[f64], pos_weight: Option<f64>) -> Vec<f64> {
    let w = pos_weight.unwrap_or(1.0);
    let n = labels.len() as f64;
    labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| {
            if y == 1 {
                -w * (1.0 - p) / n
            } else {
                p / n
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-7;

    #[test]
    fn perfect_prediction_is_near_zero() {
        let l = bce_loss(&[1], &[1.0 - EPS], None, EPS).unwrap();
        assert!(l >= 0.0 && l < 2e-7, "loss {l}");
    }

    #[test]
    fn coin_flip_is_ln_two() {
        let l = bce_loss(&[1, 0], &[0.5, 0.5], None, EPS).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn matches_independent_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.gen_range(1..64);
            let labels: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.4) as u8).collect();
            let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let w = if rng.gen_bool(0.5) { Some(rng.gen_range(0.5..4.0)) } else { None };
            let got = bce_loss(&labels, &probs, w, EPS).unwrap();

            let wv = w.unwrap_or(1.0);
            let mut oracle = 0.0f64;
            for (&y, &p) in labels.iter().zip(&probs) {
                let p = p.clamp(EPS, 1.0 - EPS);
                oracle += if y == 1 { wv * p.ln() } else { (1.0 - p).ln() };
            }
            let oracle = -oracle / n as f64;
            assert!((got - oracle).abs() < 1e-7);
            assert!(got >= 0.0);
        }
    }

    #[test]
    fn permutation_invariant_over_batch() {
        let labels = [1u8, 0, 0, 1, 1];
        let probs = [0.9, 0.2, 0.4, 0.7, 0.55];
        let a = bce_loss(&labels, &probs, None, EPS).unwrap();
        let perm = [2usize, 0, 4, 1, 3];
        let labels_p: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
        let probs_p: Vec<f64> = perm.iter().map(|&i| probs[i]).collect();
        let b = bce_loss(&labels_p, &probs_p, None, EPS).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn pos_weight_one_equals_unweighted() {
        let labels = [1u8, 0, 1];
        let probs = [0.8, 0.3, 0.6];
        let a = bce_loss(&labels, &probs, None, EPS).unwrap();
        let b = bce_loss(&labels, &probs, Some(1.0), EPS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn logit_gradient_is_p_minus_y_over_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 16;
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.5) as u8).collect();
        let probs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.99)).collect();
        let grads = bce_logit_gradient(&labels, &probs, None);
        for ((g, &y), &p) in grads.iter().zip(&labels).zip(&probs) {
            let want = (p - y as f64) / n as f64;
            assert!((g - want).abs() < 1e-6);
        }

        // and numerically: dL/dz via z -> sigmoid -> loss
        let z: Vec<f64> = probs.iter().map(|p| (p / (1.0 - p)).ln()).collect();
        let h = 1e-6;
        for i in 0..n {
            let mut zp = z.clone();
            zp[i] += h;
            let pp: Vec<f64> = zp.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
            let mut zm = z.clone();
            zm[i] -= h;
            let pm: Vec<f64> = zm.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
            let fd = (bce_loss(&labels, &pp, None, EPS).unwrap()
                - bce_loss(&labels, &pm, None, EPS).unwrap())
                / (2.0 * h);
            assert!((grads[i] - fd).abs() < 1e-6, "i={i}: {} vs {}", grads[i], fd);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            bce_loss(&[1, 0], &[0.5], None, EPS),
            Err(TrainError::LengthMismatch { .. })
        ));
    }
}
