use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elem::Elem;
use crate::error::NetError;
use crate::layers::Layer;
use crate::tensor::Tensor;

/// Inverted dropout: in training, units are kept with probability
/// `1 - rate` and scaled by `1/(1 - rate)` so expectations match eval mode,
/// which is a pass-through. The mask stream is seeded, so training runs are
/// reproducible.
pub struct Dropout<T> {
    rate: f64,
    rng: ChaCha8Rng,
    cached_mask: Option<Tensor<T>>,
}

impl<T: Elem> Dropout<T> {
    pub fn new(rate: f64, seed: u64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        Dropout { rate, rng: ChaCha8Rng::seed_from_u64(seed), cached_mask: None }
    }
}

impl<T: Elem> Layer<T> for Dropout<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Result<Tensor<T>, NetError> {
        if !train || self.rate == 0.0 {
            self.cached_mask = None;
            return Ok(x.clone());
        }
        let keep = 1.0 - self.rate;
        let scale = T::from_f64(1.0 / keep);
        let mut mask = Tensor::zeros(x.shape());
        for m in mask.data_mut() {
            if self.rng.gen::<f64>() < keep {
                *m = scale;
            }
        }
        let mut out = x.clone();
        for (v, &m) in out.data_mut().iter_mut().zip(mask.data()) {
            *v = *v * m;
        }
        self.cached_mask = Some(mask);
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        match self.cached_mask.take() {
            None => Ok(grad_out.clone()),
            Some(mask) => {
                let mut dx = grad_out.clone();
                for (d, &m) in dx.data_mut().iter_mut().zip(mask.data()) {
                    *d = *d * m;
                }
                Ok(dx)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_mode_is_identity() {
        let mut d = Dropout::<f32>::new(0.5, 1);
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(d.forward(&x, false).unwrap(), x);
    }

    #[test]
    fn inverted_dropout_preserves_expectation() {
        let mut d = Dropout::<f64>::new(0.3, 99);
        let x = Tensor::from_vec(&[1, 4], vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let eval = d.forward(&x, false).unwrap();
        let passes = 100_000;
        let mut acc = vec![0.0f64; 4];
        for _ in 0..passes {
            let y = d.forward(&x, true).unwrap();
            for (a, &v) in acc.iter_mut().zip(y.data()) {
                *a += v;
            }
        }
        for (a, &e) in acc.iter().zip(eval.data()) {
            let mean = a / passes as f64;
            assert!(
                (mean - e).abs() <= 0.01 * e.abs().max(0.1),
                "stochastic mean {mean} vs eval {e}"
            );
        }
    }

    #[test]
    fn backward_reuses_the_forward_mask() {
        let mut d = Dropout::<f64>::new(0.5, 7);
        let x = Tensor::from_vec(&[1, 8], vec![1.0; 8]).unwrap();
        let y = d.forward(&x, true).unwrap();
        let g = Tensor::from_vec(&[1, 8], vec![1.0; 8]).unwrap();
        let dx = d.backward(&g).unwrap();
        // gradient passes exactly where the activation passed
        for (gy, gv) in y.data().iter().zip(dx.data()) {
            assert_eq!(gy, gv);
        }
    }
}
