use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use evaluation::stratified_kfold;
use neuralnet::CheckpointMeta;
use training::train;

use crate::cli_error::CliError;
use crate::commands::{load_store, TrainFlags};
use crate::recipe::{apply_config_file, sha256_file, write_run_json};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset store directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: TrainFlags,
    /// Fraction of the store held out (stratified) for early stopping.
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    /// JSON config file overriding the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainRecipe {
    pub dataset: PathBuf,
    pub flags: TrainFlags,
    pub val_frac: f64,
}

/// Stratified (train, validation) split of the whole store.
pub fn holdout_split(
    labels: &[u8],
    val_frac: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), CliError> {
    if !(0.0 < val_frac && val_frac < 0.5) {
        return Err(CliError::config(format!("--val-frac {val_frac} not in (0, 0.5)")));
    }
    let k = (1.0 / val_frac).round().max(2.0) as usize;
    let folds = stratified_kfold(labels, k, seed)?;
    Ok(folds.into_iter().next().expect("k >= 2"))
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let recipe = apply_config_file(
        TrainRecipe {
            dataset: args.dataset.clone(),
            flags: args.flags.clone(),
            val_frac: args.val_frac,
        },
        args.config.as_deref(),
    )?;

    let (manifest, samples) = load_store(&recipe.dataset)?;
    let fusion_cfg = recipe.flags.fusion_config(&manifest)?;
    let train_cfg = recipe.flags.train_config();

    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let (train_idx, val_idx) = holdout_split(&labels, recipe.val_frac, train_cfg.seed)?;

    eprintln!(
        "training on {} samples, validating on {} ({} modalities, {} profile)",
        train_idx.len(),
        val_idx.len(),
        recipe.flags.modalities,
        recipe.flags.profile
    );
    let (mut model, stats) = train(&samples, &train_idx, &val_idx, &fusion_cfg, &train_cfg)?;
    for (e, loss) in stats.epoch_losses.iter().enumerate() {
        eprintln!(
            "epoch {e}: loss {loss:.6} val_f1 {:.4} val_auroc {:.4}",
            stats.val_f1[e], stats.val_auroc[e]
        );
    }
    eprintln!("best epoch {} (val F1 {:.4})", stats.best_epoch, stats.val_f1[stats.best_epoch]);

    let meta = CheckpointMeta {
        epoch: stats.best_epoch,
        seed: train_cfg.seed,
        loss_history: stats.epoch_losses.clone(),
    };
    model.save(&args.out, &meta)?;

    let out_dir = args.out.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
    let hashes = vec![
        ("dataset/manifest.json".to_string(), sha256_file(&recipe.dataset.join("manifest.json"))?),
        ("dataset/samples.bin".to_string(), sha256_file(&recipe.dataset.join("samples.bin"))?),
    ];
    write_run_json(&out_dir, "train", &recipe, &hashes)?;
    Ok(())
}
