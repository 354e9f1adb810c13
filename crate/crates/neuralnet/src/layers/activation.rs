use crate::elem::Elem;
use crate::error::NetError;
use crate::layers::Layer;
use crate::tensor::Tensor;

/// Elementwise max(0, x).
#[derive(Default)]
pub struct Relu<T> {
    cached_output: Option<Tensor<T>>,
}

impl<T: Elem> Relu<T> {
    pub fn new() -> Self {
        Relu { cached_output: None }
    }
}

impl<T: Elem> Layer<T> for Relu<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Result<Tensor<T>, NetError> {
        let out = x.map(|v| if v > T::ZERO { v } else { T::ZERO });
        self.cached_output = Some(out.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let y = self.cached_output.take().expect("relu backward without forward");
        let mut dx = grad_out.clone();
        for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
            if v <= T::ZERO {
                *d = T::ZERO;
            }
        }
        Ok(dx)
    }
}

/// Elementwise logistic sigmoid.
#[derive(Default)]
pub struct Sigmoid<T> {
    cached_output: Option<Tensor<T>>,
}

impl<T: Elem> Sigmoid<T> {
    pub fn new() -> Self {
        Sigmoid { cached_output: None }
    }
}

pub(crate) fn sigmoid_scalar<T: Elem>(z: T) -> T {
    // split on sign for numerical stability at large |z|
    if z >= T::ZERO {
        T::ONE / (T::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::ONE + e)
    }
}

impl<T: Elem> Layer<T> for Sigmoid<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Result<Tensor<T>, NetError> {
        let out = x.map(sigmoid_scalar);
        self.cached_output = Some(out.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let y = self.cached_output.take().expect("sigmoid backward without forward");
        let mut dx = grad_out.clone();
        for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
            *d = *d * v * (T::ONE - v);
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero_is_half() {
        let mut s = Sigmoid::<f64>::new();
        let x = Tensor::from_vec(&[1, 1], vec![0.0]).unwrap();
        assert_eq!(s.forward(&x, false).unwrap().data(), &[0.5]);
    }

    #[test]
    fn sigmoid_saturates_stably() {
        let mut s = Sigmoid::<f32>::new();
        let x = Tensor::from_vec(&[1, 2], vec![100.0, -100.0]).unwrap();
        let y = s.forward(&x, false).unwrap();
        assert!(y.data()[0] <= 1.0 && y.data()[0] > 0.999);
        assert!(y.data()[1] >= 0.0 && y.data()[1] < 1e-3);
    }

    #[test]
    fn relu_zeroes_negatives_and_their_grads() {
        let mut r = Relu::<f32>::new();
        let x = Tensor::from_vec(&[1, 3], vec![-1.0, 0.0, 2.0]).unwrap();
        let y = r.forward(&x, true).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
        let g = Tensor::from_vec(&[1, 3], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.backward(&g).unwrap().data(), &[0.0, 0.0, 1.0]);
    }
}
