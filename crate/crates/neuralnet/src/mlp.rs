use rand_chacha::ChaCha8Rng;

use crate::elem::Elem;
use crate::error::NetError;
use crate::init::he_uniform;
use crate::layers::{Layer, Linear, Parameter, Relu};
use crate::tensor::Tensor;

/// Fully connected stack with ReLU after every layer; used for the tabular
/// exposure features, which have no spatial structure for a conv encoder to
/// exploit.
pub struct Mlp<T> {
    layers: Vec<(Linear<T>, Relu<T>)>,
    dims: Vec<usize>,
}

impl<T: Elem> Mlp<T> {
    /// `dims` = [input, hidden..., output].
    pub fn new(name: &str, dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "mlp needs at least input and output dims");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, w) in dims.windows(2).enumerate() {
            let mut lin = Linear::new(&format!("{name}.fc{i}"), w[0], w[1]);
            he_uniform(&mut lin.weight.value, w[0], rng);
            layers.push((lin, Relu::new()));
        }
        Mlp { layers, dims: dims.to_vec() }
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }
}

impl<T: Elem> Layer<T> for Mlp<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Result<Tensor<T>, NetError> {
        let mut h = x.clone();
        for (lin, relu) in &mut self.layers {
            h = lin.forward(&h, train)?;
            h = relu.forward(&h, train)?;
        }
        Ok(h)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let mut g = grad_out.clone();
        for (lin, relu) in self.layers.iter_mut().rev() {
            g = relu.backward(&g)?;
            g = lin.backward(&g)?;
        }
        Ok(g)
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        for (lin, _) in &mut self.layers {
            lin.collect_params(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_input_with_zero_bias_gives_zero_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut mlp = Mlp::<f32>::new("gem", &[3, 8, 4], &mut rng);
        let x = Tensor::zeros(&[2, 3]);
        let y = mlp.forward(&x, false).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_width_is_last_dim() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut mlp = Mlp::<f32>::new("gem", &[5, 64, 64], &mut rng);
        assert_eq!(mlp.output_dim(), 64);
        let y = mlp.forward(&Tensor::zeros(&[3, 5]), false).unwrap();
        assert_eq!(y.shape(), &[3, 64]);
    }
}
