use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use datasetbuild::Sample;
use evaluation::{
    aggregate_folds, evaluate, leave_one_city_out, pr_best_f1_threshold, stratified_kfold,
    CitySplit, Confusion, EvalReport, PredictionRecord,
};
use training::train;

use crate::cli_error::CliError;
use crate::commands::{
    load_store, log_aggregate, split_seed, write_predictions_csv, write_report, FoldReport,
    ReportDoc, TrainFlags,
};
use crate::recipe::{apply_config_file, sha256_file, write_run_json};

#[derive(Debug, Args)]
pub struct LocoArgs {
    /// Dataset store directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub flags: TrainFlags,
    /// City-level parallelism (1 = strictly sequential).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// JSON config file overriding the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LocoRecipe {
    pub dataset: PathBuf,
    pub flags: TrainFlags,
    pub jobs: usize,
}

fn run_city(
    index: usize,
    split: &CitySplit,
    samples: &[Sample],
    recipe: &LocoRecipe,
    manifest: &datasetbuild::DatasetManifest,
) -> Result<(FoldReport, Vec<PredictionRecord>), CliError> {
    // early stopping monitors a stratified holdout carved from the
    // training cities; the held-out city stays untouched until test time
    let train_labels: Vec<u8> = split.train.iter().map(|&i| samples[i].label).collect();
    let holdout = stratified_kfold(&train_labels, 5, split_seed(recipe.flags.seed, index as u64))?;
    let (inner_train, inner_val) = &holdout[0];
    let train_idx: Vec<usize> = inner_train.iter().map(|&j| split.train[j]).collect();
    let val_idx: Vec<usize> = inner_val.iter().map(|&j| split.train[j]).collect();

    let fusion_cfg = recipe.flags.fusion_config(manifest)?;
    let mut cfg = recipe.flags.train_config();
    cfg.seed = split_seed(recipe.flags.seed, index as u64);
    let (mut model, _stats) = train(samples, &train_idx, &val_idx, &fusion_cfg, &cfg)?;

    let test_refs: Vec<&Sample> = split.test.iter().map(|&i| &samples[i]).collect();
    let preds =
        training::score_samples(&mut model, &test_refs, cfg.batch_size).map_err(CliError::from)?;
    // primary metrics select the threshold on the test PR curve; the
    // variant reuses the threshold picked on the training-side holdout
    let report = evaluate(&preds)?;
    let val_refs: Vec<&Sample> = val_idx.iter().map(|&i| &samples[i]).collect();
    let val_preds =
        training::score_samples(&mut model, &val_refs, cfg.batch_size).map_err(CliError::from)?;
    let val_thr = pr_best_f1_threshold(&val_preds)?.threshold;
    let c = Confusion::at_threshold(&preds, val_thr);
    let train_threshold_report = EvalReport {
        threshold: val_thr,
        confusion: c,
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        kappa: evaluation::cohen_kappa(&c)?,
        auroc: report.auroc,
    };
    eprintln!(
        "city {}: test F1 {:.3} AUROC {:.3} (train-threshold F1 {:.3})",
        split.city, report.f1, report.auroc, train_threshold_report.f1
    );
    Ok((
        FoldReport {
            fold: split.city.clone(),
            report,
            train_threshold_report: Some(train_threshold_report),
        },
        preds,
    ))
}

pub fn run(args: LocoArgs) -> Result<(), CliError> {
    let recipe = apply_config_file(
        LocoRecipe { dataset: args.dataset.clone(), flags: args.flags.clone(), jobs: args.jobs },
        args.config.as_deref(),
    )?;
    let (manifest, samples) = load_store(&recipe.dataset)?;
    let cities: Vec<String> = samples.iter().map(|s| s.city.clone()).collect();
    let splits = leave_one_city_out(&cities)?;

    let results: Vec<Result<(FoldReport, Vec<PredictionRecord>), CliError>> = if recipe.jobs > 1 {
        splits
            .par_iter()
            .enumerate()
            .map(|(i, split)| run_city(i, split, &samples, &recipe, &manifest))
            .collect()
    } else {
        splits
            .iter()
            .enumerate()
            .map(|(i, split)| run_city(i, split, &samples, &recipe, &manifest))
            .collect()
    };

    let mut fold_reports = Vec::new();
    let mut all_preds = Vec::new();
    for r in results {
        let (fr, preds) = r?;
        fold_reports.push(fr);
        all_preds.extend(preds);
    }
    let aggregate = aggregate_folds(
        &fold_reports.iter().map(|f| f.report.clone()).collect::<Vec<_>>(),
    )?;
    log_aggregate("leave-one-city-out mean \u{b1} std", &aggregate);

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
    write_run_json(&args.out, "loco", &recipe, &hashes)?;
    Ok(())
}
