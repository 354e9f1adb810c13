use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use datasetbuild::{build_dataset, CityInputs, DatasetConfig, SarNormMode};

use crate::cli_error::CliError;
use crate::recipe::{apply_config_file, hash_dir, write_run_json};

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Campaign directory: one subdirectory per city with the five scene
    /// files.
    #[arg(long)]
    pub scene: PathBuf,
    /// Output store directory (manifest.json + samples.bin).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub ratio: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub patch_size: usize,
    /// Store SAR patches as 10*log10(v + 1e-6).
    #[arg(long, default_value_t = false)]
    pub sar_db: bool,
    /// SAR patch normalization: none, global, or per-patch.
    #[arg(long, default_value = "none")]
    pub sar_norm: String,
    /// Store DSM patches as raw elevation instead of median-centered.
    #[arg(long, default_value_t = false)]
    pub no_dsm_relative: bool,
    /// JSON config file overriding the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetRecipe {
    pub scene: PathBuf,
    pub dataset: DatasetConfig,
}

pub fn run(args: BuildDatasetArgs) -> Result<(), CliError> {
    let sar_norm = match args.sar_norm.as_str() {
        "none" => SarNormMode::None,
        "global" => SarNormMode::Global,
        "per-patch" => SarNormMode::PerPatch,
        other => {
            return Err(CliError::config(format!(
                "unknown --sar-norm {other:?} (none|global|per-patch)"
            )))
        }
    };
    if args.patch_size == 0 || args.patch_size % 2 != 0 {
        return Err(CliError::config("--patch-size must be even and positive"));
    }
    if args.ratio < 1 {
        return Err(CliError::config("--ratio must be at least 1"));
    }
    let recipe = apply_config_file(
        DatasetRecipe {
            scene: args.scene.clone(),
            dataset: DatasetConfig {
                patch_size: args.patch_size,
                ratio: args.ratio,
                seed: args.seed,
                sar_db: args.sar_db,
                sar_norm,
                dsm_relative: !args.no_dsm_relative,
                overlap_threshold: 0.5,
            },
        },
        args.config.as_deref(),
    )?;

    // every subdirectory with the five scene files is a city
    let mut cities = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&recipe.scene)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("sar.asc").is_file())
        .collect();
    entries.sort();
    for dir in &entries {
        cities.push(CityInputs::from_dir(dir)?);
    }
    if cities.is_empty() {
        return Err(CliError::config(format!(
            "{} has no city subdirectories with scene files",
            recipe.scene.display()
        )));
    }

    let built = build_dataset(&cities, &recipe.dataset, Some(&args.out))?;
    for cc in &built.manifest.per_city {
        eprintln!("{}: {} intact + {} damaged", cc.city, cc.intact, cc.damaged);
    }
    eprintln!("total: {} samples", built.manifest.record_count);

    let mut hashes = Vec::new();
    for c in &cities {
        for (tag, path) in [
            ("sar", &c.sar),
            ("dsm", &c.dsm),
            ("footprints", &c.footprints),
            ("destroyed", &c.destroyed),
            ("gem", &c.gem),
        ] {
            hashes.push((format!("{}/{}", c.city, tag), crate::recipe::sha256_file(path)?));
        }
    }
    hashes.extend(hash_dir(&args.out)?.into_iter().filter(|(n, _)| n != "run.json"));
    write_run_json(&args.out, "build-dataset", &recipe, &hashes)?;
    Ok(())
}
