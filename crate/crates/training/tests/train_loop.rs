//! Training-loop behavior: capacity, determinism, early stopping, and the
//! error paths.

use datasetbuild::Sample;
use fusionmodel::{Batch, FusionConfig, FusionModel, Modality};
use neuralnet::{Adam, AdamConfig, EncoderConfig, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use training::{bce_logit_gradient, bce_loss, score_samples, train, TrainConfig, TrainError};

const PS: usize = 16;

/// Separable toy data: damaged buildings get a bright block in the SAR
/// patch center, intact ones stay dark.
fn toy_samples(n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let mut sar: Vec<f32> = (0..PS * PS).map(|_| rng.gen_range(0.0..0.4)).collect();
            if label == 1 {
                for y in 6..10 {
                    for x in 6..10 {
                        sar[y * PS + x] += 2.0 + rng.gen_range(0.0..0.5);
                    }
                }
            }
            let mut mask = vec![0u8; PS * PS];
            for y in 5..11 {
                for x in 5..11 {
                    mask[y * PS + x] = 1;
                }
            }
            Sample {
                sar_patch: sar,
                mask_patch: mask,
                dsm_patch: (0..PS * PS).map(|_| rng.gen_range(-0.1..0.1)).collect(),
                gem_features: vec![rng.gen_range(-1.0..1.0); 2],
                label,
                city: if i % 3 == 0 { "west".into() } else { "east".into() },
                building_id: format!("b{i:04}"),
            }
        })
        .collect()
}

fn compact_cfg(modalities: Vec<Modality>) -> FusionConfig {
    let mut cfg = FusionConfig::new(modalities, EncoderConfig::compact(), 2);
    cfg.patch_size = PS;
    cfg
}

#[test]
fn frozen_batch_loss_halves_in_50_steps_and_overfits_in_200() {
    let samples = toy_samples(32, 3);
    let refs: Vec<&Sample> = samples.iter().collect();
    let cfg = compact_cfg(vec![Modality::Sar, Modality::Ftp]);
    let mut model = FusionModel::<f32>::new(cfg.clone(), 11).unwrap();
    let mut adam: Adam<f32> = Adam::new(AdamConfig { lr: 3e-3, ..AdamConfig::default() });
    let batch = Batch::from_samples(&refs, &cfg).unwrap();

    let mut initial = None;
    let mut at_50 = None;
    let mut last = f64::INFINITY;
    for step in 0..200 {
        let acts = model.forward(&batch, true).unwrap();
        let probs: Vec<f64> = acts.probs.data().iter().map(|&p| p as f64).collect();
        let loss = bce_loss(&batch.labels, &probs, None, 1e-7).unwrap();
        if step == 0 {
            initial = Some(loss);
        }
        if step == 50 {
            at_50 = Some(loss);
        }
        last = loss;
        let grad: Vec<f32> = bce_logit_gradient(&batch.labels, &probs, None)
            .into_iter()
            .map(|g| g as f32)
            .collect();
        model.zero_grads();
        model
            .backward_from_logits(&Tensor::from_vec(&[32, 1], grad).unwrap())
            .unwrap();
        let mut params = Vec::new();
        model.collect_params(&mut params);
        adam.step(&mut params);
    }
    let initial = initial.unwrap();
    assert!(
        at_50.unwrap() < 0.5 * initial,
        "50-step loss {} vs initial {initial}",
        at_50.unwrap()
    );
    assert!(last < 0.1, "200-step loss {last}");
}

#[test]
fn same_seed_reproduces_the_loss_trajectory() {
    let samples = toy_samples(24, 5);
    let train_idx: Vec<usize> = (0..16).collect();
    let val_idx: Vec<usize> = (16..24).collect();
    let fusion = compact_cfg(vec![Modality::Sar, Modality::Ftp]);
    let cfg = TrainConfig { batch_size: 8, max_epochs: 2, seed: 42, ..Default::default() };

    let (_, stats_a) = train(&samples, &train_idx, &val_idx, &fusion, &cfg).unwrap();
    let (_, stats_b) = train(&samples, &train_idx, &val_idx, &fusion, &cfg).unwrap();
    assert_eq!(stats_a.epoch_losses, stats_b.epoch_losses);
    assert_eq!(stats_a.val_f1, stats_b.val_f1);

    let cfg_other = TrainConfig { seed: 43, ..cfg };
    let (_, stats_c) = train(&samples, &train_idx, &val_idx, &fusion, &cfg_other).unwrap();
    assert_ne!(stats_a.epoch_losses, stats_c.epoch_losses);
}

#[test]
fn single_class_train_set_is_rejected() {
    let samples = toy_samples(10, 7);
    let train_idx: Vec<usize> = (0..10).filter(|i| samples[*i].label == 0).collect();
    let val_idx: Vec<usize> = (0..10).collect();
    let fusion = compact_cfg(vec![Modality::Sar, Modality::Ftp]);
    let cfg = TrainConfig { batch_size: 4, max_epochs: 1, ..Default::default() };
    assert!(matches!(
        train(&samples, &train_idx, &val_idx, &fusion, &cfg),
        Err(TrainError::SingleClassTrainSet)
    ));
}

#[test]
fn non_finite_probabilities_make_the_loss_non_finite() {
    // the training loop aborts with DivergedLoss whenever this happens
    let loss = bce_loss(&[1, 0], &[0.5, f64::NAN], None, 1e-7).unwrap();
    assert!(!loss.is_finite());
    let loss = bce_loss(&[1], &[f64::INFINITY], None, 1e-7).unwrap();
    assert!(loss.is_finite(), "clamp bounds an infinite probability");
}

#[test]
fn returned_parameters_are_from_the_best_validation_epoch() {
    let samples = toy_samples(40, 13);
    let train_idx: Vec<usize> = (0..28).collect();
    let val_idx: Vec<usize> = (28..40).collect();
    let fusion = compact_cfg(vec![Modality::Sar, Modality::Ftp]);
    let cfg = TrainConfig {
        batch_size: 8,
        max_epochs: 4,
        adam: AdamConfig { lr: 2e-3, ..AdamConfig::default() },
        seed: 1,
        ..Default::default()
    };
    let (mut model, stats) = train(&samples, &train_idx, &val_idx, &fusion, &cfg).unwrap();

    let best = stats.val_f1[stats.best_epoch];
    for (e, f1) in stats.val_f1.iter().enumerate() {
        assert!(
            best >= *f1,
            "epoch {e} F1 {f1} exceeds recorded best {best} at {}",
            stats.best_epoch
        );
    }

    // rescoring the validation set with the returned model reproduces the
    // best epoch's F1
    let val_refs: Vec<&Sample> = val_idx.iter().map(|&i| &samples[i]).collect();
    let preds = score_samples(&mut model, &val_refs, cfg.batch_size).unwrap();
    let thr = evaluation::pr_best_f1_threshold(&preds).unwrap();
    assert!((thr.f1 - best).abs() < 1e-12);
}
