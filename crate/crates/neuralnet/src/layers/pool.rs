use crate::elem::Elem;
use crate::error::NetError;
use crate::layers::Layer;
use crate::tensor::Tensor;

/// Global average pooling: [n, c, h, w] -> [n, c].
#[derive(Default)]
pub struct GlobalAvgPool {
    cached_shape: Option<Vec<usize>>,
}

impl GlobalAvgPool {
    pub fn new() -> Self {
        GlobalAvgPool { cached_shape: None }
    }
}

impl<T: Elem> Layer<T> for GlobalAvgPool {
    fn forward(&mut self, x: &Tensor<T>, _train: bool) -> Result<Tensor<T>, NetError> {
        let s = x.shape();
        if s.len() != 4 {
            return Err(NetError::shape("global_avg_pool", format!("expected 4-d, got {s:?}")));
        }
        let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
        let inv = T::ONE / T::from_f64(hw as f64);
        let mut out = Tensor::zeros(&[n, c]);
        for i in 0..n {
            for ch in 0..c {
                let plane = &x.data()[(i * c + ch) * hw..(i * c + ch + 1) * hw];
                let mut sum = T::ZERO;
                for &v in plane {
                    sum += v;
                }
                out.data_mut()[i * c + ch] = sum * inv;
            }
        }
        self.cached_shape = Some(s.to_vec());
        Ok(out)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let s = self.cached_shape.take().expect("pool backward without forward");
        let (n, c, hw) = (s[0], s[1], s[2] * s[3]);
        if grad_out.shape() != [n, c] {
            return Err(NetError::shape(
                "global_avg_pool backward",
                format!("expected [{n}, {c}], got {:?}", grad_out.shape()),
            ));
        }
        let inv = T::ONE / T::from_f64(hw as f64);
        let mut dx = Tensor::zeros(&s);
        for i in 0..n {
            for ch in 0..c {
                let g = grad_out.data()[i * c + ch] * inv;
                dx.data_mut()[(i * c + ch) * hw..(i * c + ch + 1) * hw]
                    .iter_mut()
                    .for_each(|v| *v = g);
            }
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_to_channel_means() {
        let mut p = GlobalAvgPool::new();
        let x = Tensor::from_vec(&[1, 2, 2, 2], vec![1.0f32, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0, 10.0])
            .unwrap();
        let y = p.forward(&x, false).unwrap();
        assert_eq!(y.data(), &[2.5, 10.0]);
    }
}
