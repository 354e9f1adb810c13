use crate::elem::Elem;
use crate::error::NetError;
use crate::layers::{Layer, Parameter};
use crate::tensor::Tensor;

/// Fully connected layer: y = x W^T + b over `[n, in]` inputs.
pub struct Linear<T> {
    pub weight: Parameter<T>, // [out, in]
    pub bias: Parameter<T>,   // [out]
    in_features: usize,
    out_features: usize,
    cached_input: Option<Tensor<T>>,
}

impl<T: Elem> Linear<T> {
    pub fn new(name: &str, in_features: usize, out_features: usize) -> Self {
        Linear {
            weight: Parameter::new(
                format!("{name}.weight"),
                Tensor::zeros(&[out_features, in_features]),
            ),
            bias: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[out_features])),
            in_features,
            out_features,
            cached_input: None,
        }
    }

    fn check(&self, x: &Tensor<T>) -> Result<usize, NetError> {
        let s = x.shape();
        if s.len() != 2 || s[1] != self.in_features {
            return Err(NetError::shape(
                "linear",
                format!("expected [n, {}], got {:?}", self.in_features, s),
            ));
        }
        Ok(s[0])
    }
}

impl<T: Elem> Layer<T> for Linear<T> {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Result<Tensor<T>, NetError> {
        let n = self.check(x)?;
        let mut out = Tensor::zeros(&[n, self.out_features]);
        unsafe {
            // x [n, in] * W^T [in, out]
            T::gemm(
                n,
                self.in_features,
                self.out_features,
                T::ONE,
                x.data().as_ptr(),
                self.in_features as isize,
                1,
                self.weight.value.data().as_ptr(),
                1,
                self.in_features as isize,
                T::ZERO,
                out.data_mut().as_mut_ptr(),
                self.out_features as isize,
                1,
            );
        }
        let bias = self.bias.value.data();
        for row in out.data_mut().chunks_mut(self.out_features) {
            for (v, &b) in row.iter_mut().zip(bias) {
                *v += b;
            }
        }
        self.cached_input = Some(x.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let x = self.cached_input.take().expect("linear backward without forward");
        let n = self.check(&x)?;
        if grad_out.shape() != [n, self.out_features] {
            return Err(NetError::shape(
                "linear backward",
                format!("expected [{}, {}], got {:?}", n, self.out_features, grad_out.shape()),
            ));
        }
        unsafe {
            // dW += g^T [out, n] * x [n, in]
            T::gemm(
                self.out_features,
                n,
                self.in_features,
                T::ONE,
                grad_out.data().as_ptr(),
                1,
                self.out_features as isize,
                x.data().as_ptr(),
                self.in_features as isize,
                1,
                T::ONE,
                self.weight.grad.data_mut().as_mut_ptr(),
                self.in_features as isize,
                1,
            );
        }
        for row in grad_out.data().chunks(self.out_features) {
            for (acc, &g) in self.bias.grad.data_mut().iter_mut().zip(row) {
                *acc += g;
            }
        }
        let mut dx = Tensor::zeros(&[n, self.in_features]);
        unsafe {
            // dx = g [n, out] * W [out, in]
            T::gemm(
                n,
                self.out_features,
                self.in_features,
                T::ONE,
                grad_out.data().as_ptr(),
                self.out_features as isize,
                1,
                self.weight.value.data().as_ptr(),
                self.in_features as isize,
                1,
                T::ZERO,
                dx.data_mut().as_mut_ptr(),
                self.in_features as isize,
                1,
            );
        }
        Ok(dx)
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        out.push(&mut self.weight);
        out.push(&mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_affine_map() {
        let mut lin = Linear::<f32>::new("l", 2, 2);
        lin.weight.value.data_mut().copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        lin.bias.value.data_mut().copy_from_slice(&[0.5, -0.5]);
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap();
        let y = lin.forward(&x, false).unwrap();
        assert_eq!(y.data(), &[3.5, 6.5]);
    }

    #[test]
    fn wrong_width_is_shape_mismatch() {
        let mut lin = Linear::<f32>::new("l", 3, 1);
        let x = Tensor::<f32>::zeros(&[2, 4]);
        assert!(matches!(lin.forward(&x, false), Err(NetError::ShapeMismatch { .. })));
    }
}
