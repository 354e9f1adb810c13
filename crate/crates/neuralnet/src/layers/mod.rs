mod activation;
mod conv;
mod dropout;
mod linear;
mod norm;
mod pool;

pub use activation::{Relu, Sigmoid};
pub use conv::Conv2d;
pub use dropout::Dropout;
pub use linear::Linear;
pub use norm::{BatchNorm2d, GroupNorm, Norm, NormKind};
pub use pool::GlobalAvgPool;

use crate::elem::Elem;
use crate::error::NetError;
use crate::tensor::Tensor;

/// A trainable tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Elem> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter { name: name.into(), value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::ZERO);
    }
}

/// One differentiable operation with cached state from the last forward.
///
/// `backward` consumes the cached activations, accumulates parameter
/// gradients, and returns the gradient with respect to the layer input.
pub trait Layer<T: Elem> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Result<Tensor<T>, NetError>;

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError>;

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        let _ = out;
    }
}

/// Sample count used to split conv gradient reduction into fixed chunks.
/// The chunking is a function of the batch size only, never of the thread
/// count, so results are bit-reproducible under any parallelism.
pub(crate) const GRAD_CHUNKS: usize = 8;

pub(crate) fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    let chunks = GRAD_CHUNKS.min(n.max(1));
    let per = n.div_ceil(chunks);
    (0..n)
        .step_by(per.max(1))
        .map(|start| (start, (start + per).min(n)))
        .collect()
}
