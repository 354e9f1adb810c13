use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use datasetbuild::Sample;
use evaluation::evaluate;
use fusionmodel::FusionModel;
use training::score_samples;

use crate::cli_error::CliError;
use crate::commands::{load_store, write_predictions_csv, write_report, ReportDoc};
use crate::recipe::{sha256_file, write_run_json};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset store directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Checkpoint to score with.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output directory for report.json and predictions.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluateRecipe {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub batch: usize,
}

pub fn run(args: EvaluateArgs) -> Result<(), CliError> {
    let recipe = EvaluateRecipe {
        dataset: args.dataset.clone(),
        checkpoint: args.checkpoint.clone(),
        batch: args.batch,
    };
    let (manifest, samples) = load_store(&recipe.dataset)?;
    let (mut model, _meta) = FusionModel::load(&recipe.checkpoint, None)?;
    if model.config().gem_input_dim != manifest.g || model.config().patch_size != manifest.patch_size
    {
        return Err(CliError::config(format!(
            "checkpoint expects G={} patch={}, dataset has G={} patch={}",
            model.config().gem_input_dim,
            model.config().patch_size,
            manifest.g,
            manifest.patch_size
        )));
    }

    let refs: Vec<&Sample> = samples.iter().collect();
    let preds = score_samples(&mut model, &refs, recipe.batch).map_err(CliError::from)?;
    let report = evaluate(&preds)?;
    eprintln!(
        "threshold {:.4}: P {:.3} R {:.3} F1 {:.3} AUROC {:.3} kappa {:.3}",
        report.threshold, report.precision, report.recall, report.f1, report.auroc, report.kappa
    );

    std::fs::create_dir_all(&args.out)?;
    let doc = ReportDoc {
        config: &recipe,
        dataset_manifest_hash: sha256_file(&recipe.dataset.join("manifest.json"))?,
        metrics: Some(report),
        folds: Vec::new(),
        aggregate: None,
    };
    write_report(&args.out, &doc)?;
    write_predictions_csv(&args.out, &preds)?;
    let hashes = vec![
        ("dataset/manifest.json".to_string(), sha256_file(&recipe.dataset.join("manifest.json"))?),
        ("dataset/samples.bin".to_string(), sha256_file(&recipe.dataset.join("samples.bin"))?),
        ("checkpoint".to_string(), sha256_file(&recipe.checkpoint)?),
    ];
    write_run_json(&args.out, "evaluate", &recipe, &hashes)?;
    Ok(())
}
