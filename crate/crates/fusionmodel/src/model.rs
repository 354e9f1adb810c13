use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use datasetbuild::Sample;
use neuralnet::{
    concat_cols, load_checkpoint, save_checkpoint, split_cols, CheckpointMeta, Dropout, Elem,
    Layer, Linear, Mlp, Parameter, Relu, ResNetEncoder, Sigmoid, Tensor,
};

use crate::config::{FusionConfig, Modality};
use crate::error::FusionError;

/// One assembled mini-batch: `[n, 1, s, s]` tensors per enabled spatial
/// modality, `[n, G]` exposure features, and the labels.
pub struct Batch<T> {
    pub sar: Option<Tensor<T>>,
    pub ftp: Option<Tensor<T>>,
    pub dsm: Option<Tensor<T>>,
    pub gem: Option<Tensor<T>>,
    pub labels: Vec<u8>,
}

impl<T: Elem> Batch<T> {
    pub fn from_samples(samples: &[&Sample], cfg: &FusionConfig) -> Result<Self, FusionError> {
        let n = samples.len();
        let ps = cfg.patch_size;
        let spatial = |get: &dyn Fn(&Sample) -> Vec<T>, name: &str| -> Result<Tensor<T>, FusionError> {
            let mut data = Vec::with_capacity(n * ps * ps);
            for s in samples {
                let v = get(s);
                if v.len() != ps * ps {
                    return Err(FusionError::MissingModality {
                        modality: name.into(),
                        detail: format!("patch has {} cells, expected {}", v.len(), ps * ps),
                    });
                }
                data.extend(v);
            }
            Ok(Tensor::from_vec(&[n, 1, ps, ps], data).expect("sized above"))
        };

        let sar = if cfg.has(Modality::Sar) {
            Some(spatial(
                &|s: &Sample| s.sar_patch.iter().map(|&v| T::from_f64(v as f64)).collect(),
                "sar",
            )?)
        } else {
            None
        };
        let ftp = if cfg.has(Modality::Ftp) {
            Some(spatial(
                &|s: &Sample| s.mask_patch.iter().map(|&v| T::from_f64(v as f64)).collect(),
                "ftp",
            )?)
        } else {
            None
        };
        let dsm = if cfg.has(Modality::Dsm) {
            Some(spatial(
                &|s: &Sample| s.dsm_patch.iter().map(|&v| T::from_f64(v as f64)).collect(),
                "dsm",
            )?)
        } else {
            None
        };
        let gem = if cfg.has(Modality::Gem) {
            let g = cfg.gem_input_dim;
            let mut data = Vec::with_capacity(n * g);
            for s in samples {
                if s.gem_features.len() != g {
                    return Err(FusionError::MissingModality {
                        modality: "gem".into(),
                        detail: format!("vector has {} features, expected {g}", s.gem_features.len()),
                    });
                }
                data.extend(s.gem_features.iter().map(|&v| T::from_f64(v as f64)));
            }
            Some(Tensor::from_vec(&[n, g], data).expect("sized above"))
        } else {
            None
        };

        Ok(Batch { sar, ftp, dsm, gem, labels: samples.iter().map(|s| s.label).collect() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-modality embeddings and the fused classification outputs for one
/// forward pass.
pub struct FusionActivations<T> {
    pub embeddings: Vec<(Modality, Tensor<T>)>,
    pub fused: Tensor<T>,
    pub logits: Tensor<T>,
    /// Damage probabilities in (0, 1), one per sample.
    pub probs: Tensor<T>,
}

/// Concatenate modality embeddings in their fixed order into f_LF.
pub fn fuse<T: Elem>(embeddings: &[(Modality, Tensor<T>)]) -> Result<Tensor<T>, FusionError> {
    debug_assert!(embeddings.windows(2).all(|w| w[0].0 < w[1].0), "fusion order is fixed");
    let parts: Vec<&Tensor<T>> = embeddings.iter().map(|(_, t)| t).collect();
    concat_cols(&parts).map_err(FusionError::Net)
}

/// The late-fusion network. Spatial modalities get dedicated (non-shared)
/// encoder weights; the exposure vector goes through an MLP; the head is
/// fused -> hidden (ReLU, dropout) -> 1 -> sigmoid.
pub struct FusionModel<T> {
    cfg: FusionConfig,
    sar: Option<ResNetEncoder<T>>,
    ftp: Option<ResNetEncoder<T>>,
    dsm: Option<ResNetEncoder<T>>,
    gem: Option<Mlp<T>>,
    head_fc1: Linear<T>,
    head_relu: Relu<T>,
    head_dropout: Dropout<T>,
    head_fc2: Linear<T>,
    sigmoid: Sigmoid<T>,
}

impl<T: Elem> FusionModel<T> {
    pub fn new(cfg: FusionConfig, seed: u64) -> Result<Self, FusionError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // construction order is fixed so identical seeds give identical
        // weights regardless of which modalities are enabled downstream
        let encoder = |name: &str, enabled: bool, rng: &mut ChaCha8Rng| {
            if enabled {
                ResNetEncoder::new(name, 1, &cfg.encoder, rng).map(Some)
            } else {
                Ok(None)
            }
        };
        let sar = encoder("sar", cfg.has(Modality::Sar), &mut rng)?;
        let ftp = encoder("ftp", cfg.has(Modality::Ftp), &mut rng)?;
        let dsm = encoder("dsm", cfg.has(Modality::Dsm), &mut rng)?;
        let gem = if cfg.has(Modality::Gem) {
            let mut dims = vec![cfg.gem_input_dim];
            dims.extend(&cfg.gem_hidden);
            dims.push(cfg.gem_embedding);
            Some(Mlp::new("gem", &dims, &mut rng))
        } else {
            None
        };

        let fused = cfg.fused_dim();
        let mut head_fc1 = Linear::new("head.fc1", fused, cfg.head_hidden);
        neuralnet::he_uniform(&mut head_fc1.weight.value, fused, &mut rng);
        let mut head_fc2 = Linear::new("head.fc2", cfg.head_hidden, 1);
        neuralnet::he_uniform(&mut head_fc2.weight.value, cfg.head_hidden, &mut rng);
        let dropout_seed = rng.gen::<u64>();

        Ok(FusionModel {
            sar,
            ftp,
            dsm,
            gem,
            head_fc1,
            head_relu: Relu::new(),
            head_dropout: Dropout::new(cfg.dropout, dropout_seed),
            head_fc2,
            sigmoid: Sigmoid::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &FusionConfig {
        &self.cfg
    }

    /// One embedding per enabled modality, in fixed fusion order.
    pub fn encode_modalities(
        &mut self,
        batch: &Batch<T>,
        train: bool,
    ) -> Result<Vec<(Modality, Tensor<T>)>, FusionError> {
        let mut embeddings = Vec::new();
        let pairs: [(Modality, Option<&Tensor<T>>); 3] = [
            (Modality::Sar, batch.sar.as_ref()),
            (Modality::Ftp, batch.ftp.as_ref()),
            (Modality::Dsm, batch.dsm.as_ref()),
        ];
        for (m, input) in pairs {
            if !self.cfg.has(m) {
                continue;
            }
            let input = input.ok_or_else(|| FusionError::MissingModality {
                modality: m.to_string(),
                detail: "batch was assembled without this modality".into(),
            })?;
            let enc = match m {
                Modality::Sar => self.sar.as_mut(),
                Modality::Ftp => self.ftp.as_mut(),
                Modality::Dsm => self.dsm.as_mut(),
                Modality::Gem => unreachable!(),
            }
            .expect("encoder exists for enabled modality");
            embeddings.push((m, enc.forward(input, train)?));
        }
        if self.cfg.has(Modality::Gem) {
            let input = batch.gem.as_ref().ok_or_else(|| FusionError::MissingModality {
                modality: "gem".into(),
                detail: "batch was assembled without this modality".into(),
            })?;
            let mlp = self.gem.as_mut().expect("mlp exists for enabled modality");
            embeddings.push((Modality::Gem, mlp.forward(input, train)?));
        }
        Ok(embeddings)
    }

    /// Classification head on the fused vector: logits and probabilities.
    pub fn classify(
        &mut self,
        fused: &Tensor<T>,
        train: bool,
    ) -> Result<(Tensor<T>, Tensor<T>), FusionError> {
        let h = self.head_fc1.forward(fused, train)?;
        let h = self.head_relu.forward(&h, train)?;
        let h = self.head_dropout.forward(&h, train)?;
        let logits = self.head_fc2.forward(&h, train)?;
        let probs = self.sigmoid.forward(&logits, train)?;
        Ok((logits, probs))
    }

    pub fn forward(&mut self, batch: &Batch<T>, train: bool) -> Result<FusionActivations<T>, FusionError> {
        let embeddings = self.encode_modalities(batch, train)?;
        let fused = fuse(&embeddings)?;
        let (logits, probs) = self.classify(&fused, train)?;
        Ok(FusionActivations { embeddings, fused, logits, probs })
    }

    /// Backpropagate dL/dprobs through the whole model, accumulating
    /// parameter gradients.
    pub fn backward(&mut self, grad_probs: &Tensor<T>) -> Result<(), FusionError> {
        let g = self.sigmoid.backward(grad_probs)?;
        self.backward_from_logits(&g)
    }

    /// Backpropagate dL/dlogits, skipping the sigmoid layer. Used by the
    /// training loop, which differentiates loss(sigmoid(z)) analytically so
    /// saturated f32 probabilities cannot zero out the gradient.
    pub fn backward_from_logits(&mut self, grad_logits: &Tensor<T>) -> Result<(), FusionError> {
        let g = self.head_fc2.backward(grad_logits)?;
        let g = self.head_dropout.backward(&g)?;
        let g = self.head_relu.backward(&g)?;
        let g_fused = self.head_fc1.backward(&g)?;

        let dims: Vec<usize> = self.cfg.modalities.iter().map(|&m| self.cfg.embedding_dim(m)).collect();
        let parts = split_cols(&g_fused, &dims);
        for (&m, part) in self.cfg.modalities.clone().iter().zip(&parts) {
            match m {
                Modality::Sar => self.sar.as_mut().expect("enabled").backward(part)?,
                Modality::Ftp => self.ftp.as_mut().expect("enabled").backward(part)?,
                Modality::Dsm => self.dsm.as_mut().expect("enabled").backward(part)?,
                Modality::Gem => self.gem.as_mut().expect("enabled").backward(part)?,
            };
        }
        Ok(())
    }

    pub fn collect_params<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter<T>>) {
        if let Some(e) = &mut self.sar {
            e.collect_params(out);
        }
        if let Some(e) = &mut self.ftp {
            e.collect_params(out);
        }
        if let Some(e) = &mut self.dsm {
            e.collect_params(out);
        }
        if let Some(m) = &mut self.gem {
            m.collect_params(out);
        }
        self.head_fc1.collect_params(out);
        self.head_fc2.collect_params(out);
    }

    pub fn zero_grads(&mut self) {
        let mut params = Vec::new();
        self.collect_params(&mut params);
        for p in params {
            p.zero_grad();
        }
    }
}

impl FusionModel<f32> {
    /// Save architecture config, metadata, and all parameters.
    pub fn save(&mut self, path: impl AsRef<Path>, meta: &CheckpointMeta) -> Result<(), FusionError> {
        let config = serde_json::to_value(&self.cfg).expect("config serializes");
        let mut params = Vec::new();
        self.collect_params(&mut params);
        let named: Vec<(&str, &Tensor<f32>)> =
            params.iter().map(|p| (p.name.as_str(), &p.value)).collect();
        save_checkpoint(path, &config, meta, &named).map_err(FusionError::Net)
    }

    /// Load a checkpoint; when `expected` is given the stored config must
    /// match it exactly. Every model parameter must be present exactly once
    /// with the right shape.
    pub fn load(
        path: impl AsRef<Path>,
        expected: Option<&FusionConfig>,
    ) -> Result<(Self, CheckpointMeta), FusionError> {
        let ck = load_checkpoint(path).map_err(FusionError::Net)?;
        let cfg: FusionConfig = serde_json::from_value(ck.config.clone())
            .map_err(|e| FusionError::Net(neuralnet::NetError::ConfigMismatch(format!(
                "stored config does not parse: {e}"
            ))))?;
        if let Some(exp) = expected {
            if &cfg != exp {
                return Err(FusionError::Net(neuralnet::NetError::ConfigMismatch(format!(
                    "checkpoint built for modalities [{}], encoder {:?}; requested [{}], {:?}",
                    cfg.modalities_string(),
                    cfg.encoder,
                    exp.modalities_string(),
                    exp.encoder
                ))));
            }
        }
        let mut model = FusionModel::new(cfg, 0)?;
        let mut params = Vec::new();
        model.collect_params(&mut params);
        if params.len() != ck.params.len() {
            return Err(FusionError::Net(neuralnet::NetError::ConfigMismatch(format!(
                "checkpoint has {} parameters, architecture needs {}",
                ck.params.len(),
                params.len()
            ))));
        }
        for p in params.iter_mut() {
            let stored = ck.param(&p.name).ok_or_else(|| {
                FusionError::Net(neuralnet::NetError::ConfigMismatch(format!(
                    "checkpoint is missing parameter {}",
                    p.name
                )))
            })?;
            if stored.shape() != p.value.shape() {
                return Err(FusionError::Net(neuralnet::NetError::ConfigMismatch(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    p.name,
                    stored.shape(),
                    p.value.shape()
                ))));
            }
            p.value = stored.clone();
        }
        Ok((model, ck.meta))
    }
}
