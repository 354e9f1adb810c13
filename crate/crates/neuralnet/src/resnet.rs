use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elem::Elem;
use crate::error::NetError;
use crate::init::he_uniform;
use crate::layers::{Conv2d, GlobalAvgPool, Layer, Norm, NormKind, Parameter, Relu};
use crate::tensor::Tensor;

/// Residual encoder layout. The stem is CIFAR-style (3x3 stride-1 conv, no
/// initial max-pool) because the 32x32 patches would otherwise collapse to
/// 8x8 before the first stage. Stage 1 keeps resolution; every later stage
/// opens with a stride-2 block. The embedding is the global-average-pooled
/// output of the last stage, so `embedding_dim` must equal the final width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub stem_channels: usize,
    pub stage_blocks: Vec<usize>,
    pub stage_channels: Vec<usize>,
    pub embedding_dim: usize,
    #[serde(default)]
    pub norm: NormKind,
}

impl EncoderConfig {
    /// ResNet-18 basic-block layout.
    pub fn full() -> Self {
        EncoderConfig {
            stem_channels: 64,
            stage_blocks: vec![2, 2, 2, 2],
            stage_channels: vec![64, 128, 256, 512],
            embedding_dim: 512,
            norm: NormKind::Batch,
        }
    }

    /// Two-stage profile small enough for CPU training and gradient checks.
    pub fn compact() -> Self {
        EncoderConfig {
            stem_channels: 16,
            stage_blocks: vec![1, 1],
            stage_channels: vec![16, 32],
            embedding_dim: 32,
            norm: NormKind::Batch,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.stage_blocks.is_empty() || self.stage_blocks.len() != self.stage_channels.len() {
            return Err(NetError::shape(
                "encoder config",
                format!(
                    "{} stage block counts vs {} stage widths",
                    self.stage_blocks.len(),
                    self.stage_channels.len()
                ),
            ));
        }
        if self.stage_blocks.iter().any(|&b| b < 1) {
            return Err(NetError::shape("encoder config", "stage block counts must be >= 1"));
        }
        if self.stage_channels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NetError::shape(
                "encoder config",
                "stage channels must be strictly increasing",
            ));
        }
        if self.embedding_dim != *self.stage_channels.last().unwrap() {
            return Err(NetError::shape(
                "encoder config",
                format!(
                    "embedding dim {} != final stage width {}",
                    self.embedding_dim,
                    self.stage_channels.last().unwrap()
                ),
            ));
        }
        Ok(())
    }

    /// Stride-2 stages after the first one.
    pub fn downsample_stages(&self) -> usize {
        self.stage_blocks.len().saturating_sub(1)
    }
}

/// Basic residual block: conv-norm-relu-conv-norm plus identity (or 1x1
/// projection) shortcut, relu after the add.
struct BasicBlock<T> {
    conv1: Conv2d<T>,
    norm1: Norm<T>,
    relu1: Relu<T>,
    conv2: Conv2d<T>,
    norm2: Norm<T>,
    proj: Option<(Conv2d<T>, Norm<T>)>,
    relu_out: Relu<T>,
    cached_shortcut_identity: bool,
}

impl<T: Elem> BasicBlock<T> {
    fn new(
        name: &str,
        in_c: usize,
        out_c: usize,
        stride: usize,
        norm: NormKind,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut conv1 = Conv2d::new(&format!("{name}.conv1"), in_c, out_c, 3, stride, 1, false);
        he_uniform(&mut conv1.weight.value, in_c * 9, rng);
        let mut conv2 = Conv2d::new(&format!("{name}.conv2"), out_c, out_c, 3, 1, 1, false);
        he_uniform(&mut conv2.weight.value, out_c * 9, rng);
        let proj = if stride != 1 || in_c != out_c {
            let mut pconv = Conv2d::new(&format!("{name}.proj"), in_c, out_c, 1, stride, 0, false);
            he_uniform(&mut pconv.weight.value, in_c, rng);
            let pnorm = Norm::new(norm, &format!("{name}.proj_norm"), out_c);
            Some((pconv, pnorm))
        } else {
            None
        };
        BasicBlock {
            conv1,
            norm1: Norm::new(norm, &format!("{name}.norm1"), out_c),
            relu1: Relu::new(),
            conv2,
            norm2: Norm::new(norm, &format!("{name}.norm2"), out_c),
            proj,
            relu_out: Relu::new(),
            cached_shortcut_identity: false,
        }
    }
}

impl<T: Elem> Layer<T> for BasicBlock<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Result<Tensor<T>, NetError> {
        let main = self.conv1.forward(x, train)?;
        let main = self.norm1.forward(&main, train)?;
        let main = self.relu1.forward(&main, train)?;
        let main = self.conv2.forward(&main, train)?;
        let mut main = self.norm2.forward(&main, train)?;

        let shortcut = match &mut self.proj {
            Some((pconv, pnorm)) => {
                self.cached_shortcut_identity = false;
                let s = pconv.forward(x, train)?;
                pnorm.forward(&s, train)?
            }
            None => {
                self.cached_shortcut_identity = true;
                x.clone()
            }
        };
        if main.shape() != shortcut.shape() {
            return Err(NetError::shape(
                "residual add",
                format!("{:?} vs {:?}", main.shape(), shortcut.shape()),
            ));
        }
        for (m, &s) in main.data_mut().iter_mut().zip(shortcut.data()) {
            *m += s;
        }
        self.relu_out.forward(&main, train)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let g = self.relu_out.backward(grad_out)?;

        // main branch
        let gm = self.norm2.backward(&g)?;
        let gm = self.conv2.backward(&gm)?;
        let gm = self.relu1.backward(&gm)?;
        let gm = self.norm1.backward(&gm)?;
        let mut dx = self.conv1.backward(&gm)?;

        // shortcut branch
        let gs = if self.cached_shortcut_identity {
            g
        } else {
            let (pconv, pnorm) = self.proj.as_mut().expect("projection cached as present");
            let gs = pnorm.backward(&g)?;
            pconv.backward(&gs)?
        };
        for (d, &s) in dx.data_mut().iter_mut().zip(gs.data()) {
            *d += s;
        }
        Ok(dx)
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        self.conv1.collect_params(out);
        self.norm1.collect_params(out);
        self.conv2.collect_params(out);
        self.norm2.collect_params(out);
        if let Some((pconv, pnorm)) = &mut self.proj {
            pconv.collect_params(out);
            pnorm.collect_params(out);
        }
    }
}

/// Residual image encoder mapping a `[n, 1, s, s]` patch batch to `[n, d]`
/// embeddings (the f_k of the fusion model).
pub struct ResNetEncoder<T> {
    stem: Conv2d<T>,
    stem_norm: Norm<T>,
    stem_relu: Relu<T>,
    blocks: Vec<BasicBlock<T>>,
    pool: GlobalAvgPool,
    config: EncoderConfig,
}

impl<T: Elem> ResNetEncoder<T> {
    pub fn new(
        name: &str,
        in_channels: usize,
        config: &EncoderConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, NetError> {
        config.validate()?;
        let mut stem =
            Conv2d::new(&format!("{name}.stem"), in_channels, config.stem_channels, 3, 1, 1, false);
        he_uniform(&mut stem.weight.value, in_channels * 9, rng);
        let stem_norm = Norm::new(config.norm, &format!("{name}.stem_norm"), config.stem_channels);

        let mut blocks = Vec::new();
        let mut in_c = config.stem_channels;
        for (stage, (&count, &out_c)) in config
            .stage_blocks
            .iter()
            .zip(&config.stage_channels)
            .enumerate()
        {
            for b in 0..count {
                let stride = if stage > 0 && b == 0 { 2 } else { 1 };
                blocks.push(BasicBlock::new(
                    &format!("{name}.s{stage}b{b}"),
                    in_c,
                    out_c,
                    stride,
                    config.norm,
                    rng,
                ));
                in_c = out_c;
            }
        }
        Ok(ResNetEncoder {
            stem,
            stem_norm,
            stem_relu: Relu::new(),
            blocks,
            pool: GlobalAvgPool::new(),
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.embedding_dim
    }
}

impl<T: Elem> Layer<T> for ResNetEncoder<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Result<Tensor<T>, NetError> {
        let s = x.shape();
        let min_side = 1usize << self.config.downsample_stages();
        if s.len() != 4 || s[2] < min_side || s[3] < min_side {
            return Err(NetError::shape(
                "resnet_encode",
                format!("need [n, c, >={min_side}, >={min_side}] input, got {s:?}"),
            ));
        }
        let mut h = self.stem.forward(x, train)?;
        h = self.stem_norm.forward(&h, train)?;
        h = self.stem_relu.forward(&h, train)?;
        for block in &mut self.blocks {
            h = block.forward(&h, train)?;
        }
        self.pool.forward(&h, train)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>, NetError> {
        let mut g = self.pool.backward(grad_out)?;
        for block in self.blocks.iter_mut().rev() {
            g = block.backward(&g)?;
        }
        g = self.stem_relu.backward(&g)?;
        g = self.stem_norm.backward(&g)?;
        self.stem.backward(&g)
    }

    fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        self.stem.collect_params(out);
        self.stem_norm.collect_params(out);
        for b in &mut self.blocks {
            b.collect_params(out);
        }
    }
}
