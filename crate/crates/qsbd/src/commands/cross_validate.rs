use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use datasetbuild::Sample;
use evaluation::{aggregate_folds, evaluate, stratified_kfold, EvalReport, PredictionRecord};
use training::train;

use crate::cli_error::CliError;
use crate::commands::{
    load_store, log_aggregate, split_seed, write_predictions_csv, write_report, FoldReport,
    ReportDoc, TrainFlags,
};
use crate::recipe::{apply_config_file, sha256_file, write_run_json};

#[derive(Debug, Args)]
pub struct CrossValidateArgs {
    /// Dataset store directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub flags: TrainFlags,
    /// Fold-level parallelism (1 = strictly sequential).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// JSON config file overriding the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CrossValidateRecipe {
    pub dataset: PathBuf,
    pub k: usize,
    pub flags: TrainFlags,
    pub jobs: usize,
}

fn run_fold(
    fold: usize,
    samples: &[Sample],
    train_idx: &[usize],
    val_idx: &[usize],
    recipe: &CrossValidateRecipe,
    manifest: &datasetbuild::DatasetManifest,
) -> Result<(EvalReport, Vec<PredictionRecord>), CliError> {
    let fusion_cfg = recipe.flags.fusion_config(manifest)?;
    let mut cfg = recipe.flags.train_config();
    cfg.seed = split_seed(recipe.flags.seed, fold as u64);
    let (mut model, stats) = train(samples, train_idx, val_idx, &fusion_cfg, &cfg)?;
    let val_refs: Vec<&Sample> = val_idx.iter().map(|&i| &samples[i]).collect();
    let preds =
        training::score_samples(&mut model, &val_refs, cfg.batch_size).map_err(CliError::from)?;
    let report = evaluate(&preds)?;
    eprintln!(
        "fold {fold}: best epoch {} F1 {:.3} AUROC {:.3}",
        stats.best_epoch, report.f1, report.auroc
    );
    Ok((report, preds))
}

pub fn run(args: CrossValidateArgs) -> Result<(), CliError> {
    let recipe = apply_config_file(
        CrossValidateRecipe {
            dataset: args.dataset.clone(),
            k: args.k,
            flags: args.flags.clone(),
            jobs: args.jobs,
        },
        args.config.as_deref(),
    )?;
    if recipe.k < 2 {
        return Err(CliError::config("--k must be at least 2"));
    }

    let (manifest, samples) = load_store(&recipe.dataset)?;
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let folds = stratified_kfold(&labels, recipe.k, recipe.flags.seed)?;

    let results: Vec<Result<(EvalReport, Vec<PredictionRecord>), CliError>> = if recipe.jobs > 1 {
        folds
            .par_iter()
            .enumerate()
            .map(|(f, (tr, va))| run_fold(f, &samples, tr, va, &recipe, &manifest))
            .collect()
    } else {
        folds
            .iter()
            .enumerate()
            .map(|(f, (tr, va))| run_fold(f, &samples, tr, va, &recipe, &manifest))
            .collect()
    };

    let mut fold_reports = Vec::with_capacity(recipe.k);
    let mut all_preds = Vec::new();
    for (f, r) in results.into_iter().enumerate() {
        let (report, preds) = r?;
        fold_reports.push(FoldReport {
            fold: format!("fold_{f}"),
            report,
            train_threshold_report: None,
        });
        all_preds.extend(preds);
    }
    let aggregate = aggregate_folds(
        &fold_reports.iter().map(|f| f.report.clone()).collect::<Vec<_>>(),
    )?;
    log_aggregate("cross-validation mean \u{b1} std", &aggregate);

    std::fs::create_dir_all(&args.out)?;
    let doc = ReportDoc {
        config: &recipe,
        dataset_manifest_hash: sha256_file(&recipe.dataset.join("manifest.json"))?,
        metrics: None,
        folds: fold_reports,
        aggregate: Some(aggregate),
    };
    write_report(&args.out, &doc)?;
    write_predictions_csv(&args.out, &all_preds)?;
    let hashes = vec![
        ("dataset/manifest.json".to_string(), sha256_file(&recipe.dataset.join("manifest.json"))?),
        ("dataset/samples.bin".to_string(), sha256_file(&recipe.dataset.join("samples.bin"))?),
    ];
    write_run_json(&args.out, "cross-validate", &recipe, &hashes)?;
    Ok(())
}
