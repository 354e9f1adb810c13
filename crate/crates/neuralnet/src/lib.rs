//! Minimal CPU tensor engine with reverse-mode differentiation: the layer
//! set needed for residual patch encoders (conv, batch/group norm, ReLU,
//! residual blocks, global average pooling, fully connected, dropout,
//! sigmoid), an Adam optimizer, and checkpoint IO.
//!
//! All computation is deterministic: parallel sections only ever write
//! disjoint outputs, and every floating-point reduction runs in a fixed
//! order independent of thread count. Training math is f32; every layer is
//! also instantiable at f64, which exists for finite-difference gradient
//! verification.

mod adam;
mod checkpoint;
mod elem;
mod error;
#[doc(hidden)]
pub mod fdcheck;
mod init;
mod layers;
mod mlp;
mod resnet;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{crc32, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
pub use elem::Elem;
pub use error::NetError;
pub use init::he_uniform;
pub use layers::{
    BatchNorm2d, Conv2d, Dropout, GlobalAvgPool, GroupNorm, Layer, Linear, Norm, NormKind,
    Parameter, Relu, Sigmoid,
};
pub use mlp::Mlp;
pub use resnet::{EncoderConfig, ResNetEncoder};
pub use tensor::{concat_cols, split_cols, Tensor};
