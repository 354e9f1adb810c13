use serde::{Deserialize, Serialize};

use crate::elem::Elem;
use crate::error::NetError;
use crate::layers::{Layer, Parameter};
use crate::tensor::Tensor;

/// Which normalization layer the encoders use. Batch norm is the default;
/// group norm is the documented fallback for very small batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Batch,
    Group { groups: usize },
}

impl Default for NormKind {
    fn default() -> Self {
        NormKind::Batch
    }
}

pub enum Norm<T> {
    Batch(BatchNorm2d<T>),
    Group(GroupNorm<T>),
}

impl<T: Elem> Norm<T> {
    pub fn new(kind: NormKind, name: &str, channels: usize) -> Self {
        match kind {
            NormKind::Batch => Norm::Batch(BatchNorm2d::new(name, channels)),
            NormKind::Group { groups } => Norm::Group(GroupNorm::new(name, channels, groups)),
        }
    }
}

impl<T: Elem> Layer<T> for Norm<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Result<Tensor<T>, NetError> {
        match self {
            Norm::Batch(n) => n.forward(x, train),
            Norm::Group(n) => n.forward(x, train),
        }
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        match self {
            Norm::Batch(n) => n.backward(grad_out),
            Norm::Group(n) => n.backward(grad_out),
        }
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        match self {
            Norm::Batch(n) => n.collect_params(out),
            Norm::Group(n) => n.collect_params(out),
        }
    }
}

struct BnCache<T> {
    x: Tensor<T>,
    mean: Vec<T>,
    invstd: Vec<T>,
    train: bool,
}

/// Batch normalization over NCHW with per-channel affine parameters.
///
/// Training uses population (divide by m) batch statistics and updates the
/// running buffers with momentum; eval normalizes with the stored running
/// statistics.
pub struct BatchNorm2d<T> {
    pub gamma: Parameter<T>,
    pub beta: Parameter<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    channels: usize,
    momentum: T,
    eps: T,
    cache: Option<BnCache<T>>,
}

impl<T: Elem> BatchNorm2d<T> {
    pub fn new(name: &str, channels: usize) -> Self {
        let mut gamma = Parameter::new(format!("{name}.gamma"), Tensor::zeros(&[channels]));
        gamma.value.fill(T::ONE);
        let beta = Parameter::new(format!("{name}.beta"), Tensor::zeros(&[channels]));
        BatchNorm2d {
            gamma,
            beta,
            running_mean: vec![T::ZERO; channels],
            running_var: vec![T::ONE; channels],
            channels,
            momentum: T::from_f64(0.1),
            eps: T::from_f64(1e-5),
            cache: None,
        }
    }

    fn check(&self, x: &Tensor<T>) -> Result<(usize, usize), NetError> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.channels {
            return Err(NetError::shape(
                "batchnorm",
                format!("expected [n, {}, h, w], got {:?}", self.channels, s),
            ));
        }
        Ok((s[0], s[2] * s[3]))
    }
}

impl<T: Elem> Layer<T> for BatchNorm2d<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Result<Tensor<T>, NetError> {
        let (n, hw) = self.check(x)?;
        let c = self.channels;
        let m = T::from_f64((n * hw) as f64);

        let (mean, var) = if train {
            let mut mean = vec![T::ZERO; c];
            let mut var = vec![T::ZERO; c];
            for i in 0..n {
                for ch in 0..c {
                    let plane = &x.data()[(i * c + ch) * hw..(i * c + ch + 1) * hw];
                    let mut s = T::ZERO;
                    for &v in plane {
                        s += v;
                    }
                    mean[ch] += s;
                }
            }
            mean.iter_mut().for_each(|v| *v = *v / m);
            for i in 0..n {
                for ch in 0..c {
                    let plane = &x.data()[(i * c + ch) * hw..(i * c + ch + 1) * hw];
                    let mu = mean[ch];
                    let mut s = T::ZERO;
                    for &v in plane {
                        let d = v - mu;
                        s += d * d;
                    }
                    var[ch] += s;
                }
            }
            var.iter_mut().for_each(|v| *v = *v / m);
            for ch in 0..c {
                self.running_mean[ch] =
                    (T::ONE - self.momentum) * self.running_mean[ch] + self.momentum * mean[ch];
                self.running_var[ch] =
                    (T::ONE - self.momentum) * self.running_var[ch] + self.momentum * var[ch];
            }
            (mean, var)
        } else {
            (self.running_mean.clone(), self.running_var.clone())
        };

        let invstd: Vec<T> = var.iter().map(|&v| T::ONE / (v + self.eps).sqrt()).collect();
        let mut out = Tensor::zeros(x.shape());
        for i in 0..n {
            for ch in 0..c {
                let g = self.gamma.value.data()[ch];
                let b = self.beta.value.data()[ch];
                let mu = mean[ch];
                let is = invstd[ch];
                let src = &x.data()[(i * c + ch) * hw..(i * c + ch + 1) * hw];
                let dst = &mut out.data_mut()[(i * c + ch) * hw..(i * c + ch + 1) * hw];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = (s - mu) * is * g + b;
                }
            }
        }
        self.cache = Some(BnCache { x: x.clone(), mean, invstd, train });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let cache = self.cache.take().expect("batchnorm backward without forward");
        let (n, hw) = self.check(&cache.x)?;
        let c = self.channels;
        let m = T::from_f64((n * hw) as f64);
        let mut dx = Tensor::zeros(cache.x.shape());

        for ch in 0..c {
            let mu = cache.mean[ch];
            let is = cache.invstd[ch];
            let gamma = self.gamma.value.data()[ch];

            let mut sum_g = T::ZERO;
            let mut sum_g_xhat = T::ZERO;
            for i in 0..n {
                let base = (i * c + ch) * hw;
                let g = &grad_out.data()[base..base + hw];
                let xs = &cache.x.data()[base..base + hw];
                for (&gv, &xv) in g.iter().zip(xs) {
                    sum_g += gv;
                    sum_g_xhat += gv * (xv - mu) * is;
                }
            }
            self.beta.grad.data_mut()[ch] += sum_g;
            self.gamma.grad.data_mut()[ch] += sum_g_xhat;

            if cache.train {
                // dx = gamma*is/m * (m*g - sum_g - xhat * sum_g_xhat)
                for i in 0..n {
                    let base = (i * c + ch) * hw;
                    for j in 0..hw {
                        let gv = grad_out.data()[base + j];
                        let xhat = (cache.x.data()[base + j] - mu) * is;
                        dx.data_mut()[base + j] =
                            gamma * is / m * (m * gv - sum_g - xhat * sum_g_xhat);
                    }
                }
            } else {
                // running statistics are constants in eval mode
                for i in 0..n {
                    let base = (i * c + ch) * hw;
                    for j in 0..hw {
                        dx.data_mut()[base + j] = grad_out.data()[base + j] * gamma * is;
                    }
                }
            }
        }
        Ok(dx)
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        out.push(&mut self.gamma);
        out.push(&mut self.beta);
    }
}

struct GnCache<T> {
    x: Tensor<T>,
    mean: Vec<T>,
    invstd: Vec<T>,
}

/// Group normalization: statistics per (sample, channel group), identical in
/// train and eval mode.
pub struct GroupNorm<T> {
    pub gamma: Parameter<T>,
    pub beta: Parameter<T>,
    channels: usize,
    groups: usize,
    eps: T,
    cache: Option<GnCache<T>>,
}

impl<T: Elem> GroupNorm<T> {
    pub fn new(name: &str, channels: usize, groups: usize) -> Self {
        assert!(groups >= 1 && channels % groups == 0, "channels must divide into groups");
        let mut gamma = Parameter::new(format!("{name}.gamma"), Tensor::zeros(&[channels]));
        gamma.value.fill(T::ONE);
        let beta = Parameter::new(format!("{name}.beta"), Tensor::zeros(&[channels]));
        GroupNorm { gamma, beta, channels, groups, eps: T::from_f64(1e-5), cache: None }
    }

    fn check(&self, x: &Tensor<T>) -> Result<(usize, usize), NetError> {
        let s = x.shape();
        if s.len() != 4 || s[1] != self.channels {
            return Err(NetError::shape(
                "groupnorm",
                format!("expected [n, {}, h, w], got {:?}", self.channels, s),
            ));
        }
        Ok((s[0], s[2] * s[3]))
    }
}

impl<T: Elem> Layer<T> for GroupNorm<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Result<Tensor<T>, NetError> {
        let (n, hw) = self.check(x)?;
        let c = self.channels;
        let cg = c / self.groups;
        let m = T::from_f64((cg * hw) as f64);

        let mut mean = vec![T::ZERO; n * self.groups];
        let mut invstd = vec![T::ZERO; n * self.groups];
        let mut out = Tensor::zeros(x.shape());
        for i in 0..n {
            for g in 0..self.groups {
                let base = (i * c + g * cg) * hw;
                let slab = &x.data()[base..base + cg * hw];
                let mut s = T::ZERO;
                for &v in slab {
                    s += v;
                }
                let mu = s / m;
                let mut vs = T::ZERO;
                for &v in slab {
                    let d = v - mu;
                    vs += d * d;
                }
                let is = T::ONE / (vs / m + self.eps).sqrt();
                mean[i * self.groups + g] = mu;
                invstd[i * self.groups + g] = is;
                for local_c in 0..cg {
                    let ch = g * cg + local_c;
                    let gamma = self.gamma.value.data()[ch];
                    let beta = self.beta.value.data()[ch];
                    let pbase = (i * c + ch) * hw;
                    for j in 0..hw {
                        out.data_mut()[pbase + j] =
                            (x.data()[pbase + j] - mu) * is * gamma + beta;
                    }
                }
            }
        }
        self.cache = Some(GnCache { x: x.clone(), mean, invstd });
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let cache = self.cache.take().expect("groupnorm backward without forward");
        let (n, hw) = self.check(&cache.x)?;
        let c = self.channels;
        let cg = c / self.groups;
        let m = T::from_f64((cg * hw) as f64);
        let mut dx = Tensor::zeros(cache.x.shape());

        for i in 0..n {
            for g in 0..self.groups {
                let mu = cache.mean[i * self.groups + g];
                let is = cache.invstd[i * self.groups + g];

                // reductions over the group, gamma-weighted where needed
                let mut sum_dxhat = T::ZERO;
                let mut sum_dxhat_xhat = T::ZERO;
                for local_c in 0..cg {
                    let ch = g * cg + local_c;
                    let gamma = self.gamma.value.data()[ch];
                    let pbase = (i * c + ch) * hw;
                    let mut dgam = T::ZERO;
                    let mut dbet = T::ZERO;
                    for j in 0..hw {
                        let gv = grad_out.data()[pbase + j];
                        let xhat = (cache.x.data()[pbase + j] - mu) * is;
                        dgam += gv * xhat;
                        dbet += gv;
                        sum_dxhat += gv * gamma;
                        sum_dxhat_xhat += gv * gamma * xhat;
                    }
                    self.gamma.grad.data_mut()[ch] += dgam;
                    self.beta.grad.data_mut()[ch] += dbet;
                }
                for local_c in 0..cg {
                    let ch = g * cg + local_c;
                    let gamma = self.gamma.value.data()[ch];
                    let pbase = (i * c + ch) * hw;
                    for j in 0..hw {
                        let gv = grad_out.data()[pbase + j];
                        let xhat = (cache.x.data()[pbase + j] - mu) * is;
                        dx.data_mut()[pbase + j] =
                            is / m * (m * gv * gamma - sum_dxhat - xhat * sum_dxhat_xhat);
                    }
                }
            }
        }
        Ok(dx)
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        out.push(&mut self.gamma);
        out.push(&mut self.beta);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batchnorm_normalizes_batch_statistics() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 2);
        let x = Tensor::from_vec(
            &[2, 2, 1, 2],
            vec![1.0, 2.0, 10.0, 20.0, 3.0, 4.0, 30.0, 40.0],
        )
        .unwrap();
        let y = bn.forward(&x, true).unwrap();
        // per-channel mean of output ~ 0, var ~ 1
        for ch in 0..2 {
            let vals: Vec<f64> = (0..2)
                .flat_map(|i| y.data()[(i * 2 + ch) * 2..(i * 2 + ch) * 2 + 2].to_vec())
                .collect();
            let mean: f64 = vals.iter().sum::<f64>() / 4.0;
            let var: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn batchnorm_eval_converges_to_train_output() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 1);
        let x = Tensor::from_vec(&[2, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
            .unwrap();
        let mut train_out = Tensor::zeros(&[1]);
        for _ in 0..500 {
            train_out = bn.forward(&x, true).unwrap();
        }
        let eval_out = bn.forward(&x, false).unwrap();
        for (a, b) in train_out.data().iter().zip(eval_out.data()) {
            assert!((a - b).abs() < 1e-6, "train {a} vs eval {b}");
        }
    }

    #[test]
    fn groupnorm_instance_statistics() {
        let mut gn = GroupNorm::<f64>::new("gn", 4, 2);
        let x = Tensor::from_vec(&[1, 4, 1, 1], vec![1.0, 3.0, 10.0, 30.0]).unwrap();
        let y = gn.forward(&x, true).unwrap();
        // group {1,3} normalizes to {-1, 1}
        assert!((y.data()[0] + 1.0).abs() < 1e-2);
        assert!((y.data()[1] - 1.0).abs() < 1e-2);
    }
}
