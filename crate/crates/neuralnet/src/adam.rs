use serde::{Deserialize, Serialize};

use crate::elem::Elem;
use crate::layers::Parameter;
use crate::tensor::Tensor;

/// Adam hyperparameters. Defaults are the declared training defaults of the
/// toolkit and are surfaced in every run config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias correction. Moment buffers are kept in parameter order;
/// the parameter list must be identical across steps.
pub struct Adam<T> {
    cfg: AdamConfig,
    t: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Elem> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam { cfg, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    /// One first/second-moment update with bias correction across all
    /// parameters, reading `param.grad` and updating `param.value`.
    pub fn step(&mut self, params: &mut [&mut Parameter<T>]) {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
            self.v = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        }
        assert_eq!(self.m.len(), params.len(), "parameter set changed between steps");

        self.t += 1;
        let beta1 = T::from_f64(self.cfg.beta1);
        let beta2 = T::from_f64(self.cfg.beta2);
        let lr = T::from_f64(self.cfg.lr);
        let eps = T::from_f64(self.cfg.eps);
        let bc1 = T::from_f64(1.0 - self.cfg.beta1.powi(self.t as i32));
        let bc2 = T::from_f64(1.0 - self.cfg.beta2.powi(self.t as i32));

        for ((param, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            for ((w, &g), (m_e, v_e)) in param
                .value
                .data_mut()
                .iter_mut()
                .zip(param.grad.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut()))
            {
                *m_e = beta1 * *m_e + (T::ONE - beta1) * g;
                *v_e = beta2 * *v_e + (T::ONE - beta2) * g * g;
                let m_hat = *m_e / bc1;
                let v_hat = *v_e / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(value: f64, grad: f64) -> Parameter<f64> {
        let mut p = Parameter::new("w", Tensor::from_vec(&[1], vec![value]).unwrap());
        p.grad.data_mut()[0] = grad;
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = scalar_param(1.5, 0.0);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p]);
        assert_eq!(p.value.data()[0], 1.5);
    }

    #[test]
    fn first_step_is_bias_corrected() {
        // g=1, lr=0.1: m_hat = 1, v_hat = 1 => delta = -0.1/(1 + 1e-8)
        let mut p = scalar_param(0.0, 1.0);
        let mut adam = Adam::new(AdamConfig { lr: 0.1, ..AdamConfig::default() });
        adam.step(&mut [&mut p]);
        assert!((p.value.data()[0] + 0.1).abs() < 1e-8);
    }

    #[test]
    fn quadratic_bowl_converges() {
        // f(w) = w^2, df/dw = 2w, from w0 = 1
        let mut p = scalar_param(1.0, 0.0);
        let mut adam = Adam::new(AdamConfig { lr: 0.05, ..AdamConfig::default() });
        for _ in 0..200 {
            p.grad.data_mut()[0] = 2.0 * p.value.data()[0];
            adam.step(&mut [&mut p]);
        }
        assert!(p.value.data()[0].abs() < 1e-2, "w = {}", p.value.data()[0]);
    }
}
