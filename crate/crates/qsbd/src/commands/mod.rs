pub mod cross_validate;
pub mod dataset;
pub mod evaluate;
pub mod loco;
pub mod predict;
pub mod synth;
pub mod train;

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use datasetbuild::{DatasetManifest, Sample};
use evaluation::{EvalReport, FoldAggregate, PredictionRecord};
use fusionmodel::{FusionConfig, Modality};
use neuralnet::{AdamConfig, EncoderConfig};
use training::TrainConfig;

use crate::cli_error::CliError;
use crate::recipe::atomic_write;

/// Flags shared by every training-style subcommand.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainFlags {
    /// Comma-separated modality set; sar and ftp are mandatory.
    #[arg(long, default_value = "sar,ftp,dsm,gem")]
    pub modalities: String,
    /// Encoder profile.
    #[arg(long, default_value = "compact")]
    pub profile: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    /// Early-stop patience in epochs.
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Optional positive-class weight for the loss.
    #[arg(long)]
    pub pos_weight: Option<f64>,
}

impl TrainFlags {
    pub fn encoder(&self) -> Result<EncoderConfig, CliError> {
        match self.profile.as_str() {
            "compact" => Ok(EncoderConfig::compact()),
            "full" => Ok(EncoderConfig::full()),
            other => Err(CliError::config(format!(
                "unknown profile {other:?} (expected compact or full)"
            ))),
        }
    }

    pub fn fusion_config(&self, manifest: &DatasetManifest) -> Result<FusionConfig, CliError> {
        let modalities = Modality::parse_set(&self.modalities).map_err(CliError::from)?;
        let mut cfg = FusionConfig::new(modalities, self.encoder()?, manifest.g);
        cfg.patch_size = manifest.patch_size;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch,
            max_epochs: self.epochs,
            adam: AdamConfig { lr: self.lr, ..AdamConfig::default() },
            patience: self.patience,
            eps: 1e-7,
            pos_weight: self.pos_weight,
            seed: self.seed,
        }
    }
}

pub fn load_store(dir: &Path) -> Result<(DatasetManifest, Vec<Sample>), CliError> {
    if !dir.join("manifest.json").is_file() {
        return Err(CliError::config(format!(
            "{} is not a dataset store (missing manifest.json)",
            dir.display()
        )));
    }
    datasetbuild::read_store(dir).map_err(CliError::from)
}

/// Seed for per-fold / per-city training runs, derived from the base seed
/// and the split index.
pub fn split_seed(base: u64, index: u64) -> u64 {
    base ^ index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: String,
    pub report: EvalReport,
    /// Metrics at a threshold chosen on held-out training-side predictions
    /// instead of the test PR curve (reported for LOCO runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_threshold_report: Option<EvalReport>,
}

/// The `report.json` document shared by evaluate / cross-validate / loco.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDoc<C: Serialize> {
    pub config: C,
    pub dataset_manifest_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default = "Vec::new")]
    pub folds: Vec<FoldReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<FoldAggregate>,
}

pub fn write_report<C: Serialize>(out_dir: &Path, doc: &ReportDoc<C>) -> Result<(), CliError> {
    atomic_write(
        &out_dir.join("report.json"),
        serde_json::to_string_pretty(doc)?.as_bytes(),
    )?;
    Ok(())
}

pub fn write_predictions_csv(out_dir: &Path, preds: &[PredictionRecord]) -> Result<(), CliError> {
    let mut csv = String::from("building_id,city,score,label\n");
    for p in preds {
        csv.push_str(&format!("{},{},{},{}\n", p.building_id, p.city, p.score, p.label));
    }
    atomic_write(&out_dir.join("predictions.csv"), csv.as_bytes())
}

/// Human-readable aggregate table on stderr.
pub fn log_aggregate(tag: &str, agg: &FoldAggregate) {
    eprintln!("{tag}:");
    for line in agg.table().lines() {
        eprintln!("  {line}");
    }
}
