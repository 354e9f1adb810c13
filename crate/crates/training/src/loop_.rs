use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use datasetbuild::Sample;
use evaluation::{pr_best_f1_threshold, PredictionRecord};
use fusionmodel::{Batch, FusionConfig, FusionModel};
use neuralnet::{Adam, AdamConfig, Tensor};

use crate::error::TrainError;
use crate::loss::{bce_logit_gradient, bce_loss};

/// Training hyperparameters. The paper defers its exact configuration to an
/// unpublished setup, so these are declared toolkit defaults, all surfaced
/// in run configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub adam: AdamConfig,
    /// Early-stop patience, in epochs without a new best validation F1.
    pub patience: usize,
    /// Probability clamp for the loss logs.
    pub eps: f64,
    pub pos_weight: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            max_epochs: 50,
            adam: AdamConfig::default(),
            patience: 10,
            eps: 1e-7,
            pos_weight: None,
            seed: 0,
        }
    }
}

/// Loss and validation trajectory of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub epoch_losses: Vec<f64>,
    pub val_f1: Vec<f64>,
    pub val_auroc: Vec<f64>,
    pub best_epoch: usize,
    pub wall_seconds: f64,
}

/// Score samples with a frozen model in eval mode; returns one prediction
/// per sample in input order.
pub fn score_samples(
    model: &mut FusionModel<f32>,
    samples: &[&Sample],
    batch_size: usize,
) -> Result<Vec<PredictionRecord>, TrainError> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(batch_size.max(1)) {
        let batch = Batch::from_samples(chunk, model.config())?;
        let acts = model.forward(&batch, false)?;
        for (s, &p) in chunk.iter().zip(acts.probs.data()) {
            out.push(PredictionRecord {
                building_id: s.building_id.clone(),
                city: s.city.clone(),
                score: p as f64,
                label: s.label,
            });
        }
    }
    Ok(out)
}

/// Train end-to-end on `train_idx`, monitoring F1 at the best-F1 threshold
/// on `val_idx` after every epoch, and return the parameters of the best
/// validation epoch. Deterministic for a fixed (seed, config, dataset):
/// shuffles derive from seed XOR epoch and every numeric reduction runs in
/// a fixed order.
pub fn train(
    samples: &[Sample],
    train_idx: &[usize],
    val_idx: &[usize],
    fusion_cfg: &FusionConfig,
    cfg: &TrainConfig,
) -> Result<(FusionModel<f32>, TrainingStats), TrainError> {
    assert!(cfg.batch_size >= 1);
    let started = std::time::Instant::now();
    let has = |label: u8| train_idx.iter().any(|&i| samples[i].label == label);
    if !(has(0) && has(1)) {
        return Err(TrainError::SingleClassTrainSet);
    }

    let mut model = FusionModel::new(fusion_cfg.clone(), cfg.seed)?;
    let mut adam: Adam<f32> = Adam::new(cfg.adam);

    let mut stats = TrainingStats {
        epoch_losses: Vec::new(),
        val_f1: Vec::new(),
        val_auroc: Vec::new(),
        best_epoch: 0,
        wall_seconds: 0.0,
    };
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_params: Vec<Tensor<f32>> = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let mut order: Vec<usize> = train_idx.to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ epoch as u64);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let batch = Batch::from_samples(&refs, fusion_cfg)?;
            let acts = model.forward(&batch, true)?;
            let probs: Vec<f64> = acts.probs.data().iter().map(|&p| p as f64).collect();
            let loss = bce_loss(&batch.labels, &probs, cfg.pos_weight, cfg.eps)?;
            if !loss.is_finite() {
                return Err(TrainError::DivergedLoss { epoch, batch: batch_no });
            }
            loss_sum += loss * chunk.len() as f64;

            let grad: Vec<f32> = bce_logit_gradient(&batch.labels, &probs, cfg.pos_weight)
                .into_iter()
                .map(|g| g as f32)
                .collect();
            let grad_logits = Tensor::from_vec(&[chunk.len(), 1], grad).expect("sized");
            model.zero_grads();
            model.backward_from_logits(&grad_logits)?;
            let mut params = Vec::new();
            model.collect_params(&mut params);
            adam.step(&mut params);
        }
        stats.epoch_losses.push(loss_sum / train_idx.len() as f64);

        // validation metrics at the best-F1 threshold
        let val_refs: Vec<&Sample> = val_idx.iter().map(|&i| &samples[i]).collect();
        let preds = score_samples(&mut model, &val_refs, cfg.batch_size)?;
        let thr = pr_best_f1_threshold(&preds)?;
        let auc = evaluation::auroc(&preds)?;
        stats.val_f1.push(thr.f1);
        stats.val_auroc.push(auc);

        if thr.f1 > best_f1 {
            best_f1 = thr.f1;
            stats.best_epoch = epoch;
            let mut params = Vec::new();
            model.collect_params(&mut params);
            best_params = params.iter().map(|p| p.value.clone()).collect();
        } else if epoch - stats.best_epoch >= cfg.patience {
            break;
        }
    }

    // restore the best-epoch parameters
    if !best_params.is_empty() {
        let mut params = Vec::new();
        model.collect_params(&mut params);
        for (p, best) in params.iter_mut().zip(best_params) {
            p.value = best;
        }
    }
    stats.wall_seconds = started.elapsed().as_secs_f64();
    Ok((model, stats))
}
