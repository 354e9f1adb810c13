use crate::elem::Elem;
use crate::error::NetError;

/// Dense row-major tensor with up to 4 dimensions, NCHW order for images.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Elem> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        assert!(shape.len() <= 4, "tensors are limited to 4 dims");
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::ZERO; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self, NetError> {
        assert!(shape.len() <= 4, "tensors are limited to 4 dims");
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(NetError::shape(
                "from_vec",
                format!("shape {:?} needs {} values, got {}", shape, expected, data.len()),
            ));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Reinterpret the buffer under a new shape with the same element count.
    pub fn reshaped(mut self, shape: &[usize]) -> Result<Self, NetError> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(NetError::shape(
                "reshape",
                format!("cannot view {:?} as {:?}", self.shape, shape),
            ));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn map<U: Elem>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Concatenate 2-D tensors `[n, d_i]` along dim 1 into `[n, sum(d_i)]`.
pub fn concat_cols<T: Elem>(parts: &[&Tensor<T>]) -> Result<Tensor<T>, NetError> {
    assert!(!parts.is_empty());
    let n = parts[0].shape()[0];
    for p in parts {
        if p.shape().len() != 2 || p.shape()[0] != n {
            return Err(NetError::shape(
                "concat",
                format!("expected [{}, *] operands, got {:?}", n, p.shape()),
            ));
        }
    }
    let total: usize = parts.iter().map(|p| p.shape()[1]).sum();
    let mut out = Tensor::zeros(&[n, total]);
    for row in 0..n {
        let mut offset = 0usize;
        for p in parts {
            let d = p.shape()[1];
            out.data_mut()[row * total + offset..row * total + offset + d]
                .copy_from_slice(&p.data()[row * d..(row + 1) * d]);
            offset += d;
        }
    }
    Ok(out)
}

/// Split the gradient of a concatenated `[n, sum(d_i)]` tensor back into
/// per-part gradients; inverse of [`concat_cols`].
pub fn split_cols<T: Elem>(grad: &Tensor<T>, dims: &[usize]) -> Vec<Tensor<T>> {
    let n = grad.shape()[0];
    let total = grad.shape()[1];
    debug_assert_eq!(dims.iter().sum::<usize>(), total);
    let mut out: Vec<Tensor<T>> = dims.iter().map(|&d| Tensor::zeros(&[n, d])).collect();
    for row in 0..n {
        let mut offset = 0usize;
        for (part, &d) in out.iter_mut().zip(dims) {
            part.data_mut()[row * d..(row + 1) * d]
                .copy_from_slice(&grad.data()[row * total + offset..row * total + offset + d]);
            offset += d;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_and_split_are_inverse() {
        let a = Tensor::from_vec(&[2, 2], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::from_vec(&[2, 1], vec![5.0f32, 6.0]).unwrap();
        let cat = concat_cols(&[&a, &b]).unwrap();
        assert_eq!(cat.shape(), &[2, 3]);
        assert_eq!(cat.data(), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        let parts = split_cols(&cat, &[2, 1]);
        assert_eq!(parts[0], a);
        assert_eq!(parts[1], b);
    }

    #[test]
    fn from_vec_checks_count() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0f32; 5]).is_err());
    }
}
