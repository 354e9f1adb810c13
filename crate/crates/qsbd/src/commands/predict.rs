use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use datasetbuild::{
    apply_gem_norm, extract_mask_patch, extract_patch, subtract_median, Sample, SarNorm,
};
use fusionmodel::FusionModel;
use geocore::{
    nearest_point, read_ascii_grid, read_feature_collection, read_point_table,
    write_feature_collection, Feature,
};
use training::score_samples;

use crate::cli_error::CliError;
use crate::recipe::{sha256_file, write_run_json};

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Footprints to score (GeoJSON FeatureCollection).
    #[arg(long)]
    pub footprints: PathBuf,
    /// Post-event SAR raster.
    #[arg(long)]
    pub sar: PathBuf,
    /// DSM raster.
    #[arg(long)]
    pub dsm: PathBuf,
    /// Exposure table.
    #[arg(long)]
    pub gem: PathBuf,
    /// Dataset store whose manifest defines the preprocessing (patch size,
    /// normalization statistics).
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output prediction GeoJSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Decision threshold for the `damaged` property.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictRecipe {
    pub footprints: PathBuf,
    pub sar: PathBuf,
    pub dsm: PathBuf,
    pub gem: PathBuf,
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub threshold: f64,
    pub batch: usize,
}

pub fn run(args: PredictArgs) -> Result<(), CliError> {
    let recipe = PredictRecipe {
        footprints: args.footprints.clone(),
        sar: args.sar.clone(),
        dsm: args.dsm.clone(),
        gem: args.gem.clone(),
        dataset: args.dataset.clone(),
        checkpoint: args.checkpoint.clone(),
        threshold: args.threshold,
        batch: args.batch,
    };

    let manifest: datasetbuild::DatasetManifest = serde_json::from_slice(
        &std::fs::read(recipe.dataset.join("manifest.json"))
            .map_err(|e| CliError::runtime(format!("cannot read dataset manifest: {e}")))?,
    )?;
    let (mut model, _) = FusionModel::load(&recipe.checkpoint, None)?;
    if model.config().gem_input_dim != manifest.g || model.config().patch_size != manifest.patch_size
    {
        return Err(CliError::config(format!(
            "checkpoint expects G={} patch={}, dataset manifest has G={} patch={}",
            model.config().gem_input_dim,
            model.config().patch_size,
            manifest.g,
            manifest.patch_size
        )));
    }

    let feats = read_feature_collection(&recipe.footprints)?;
    let sar = read_ascii_grid(&recipe.sar)?;
    let dsm = read_ascii_grid(&recipe.dsm)?;
    let gem = read_point_table(&recipe.gem)?;
    if gem.attribute_names.len() != manifest.g {
        return Err(CliError::config(format!(
            "exposure table has {} attributes, manifest expects {}",
            gem.attribute_names.len(),
            manifest.g
        )));
    }

    // replicate the training-time preprocessing from the manifest
    let ps = manifest.patch_size;
    let mut samples = Vec::with_capacity(feats.len());
    for f in &feats {
        let centroid = f.polygon.centroid()?;
        let mut sar_patch = extract_patch(&sar, centroid, ps);
        if manifest.sar_db {
            sar_patch.iter_mut().for_each(|v| *v = 10.0 * (*v + 1e-6).log10());
        }
        match manifest.sar {
            SarNorm::None => {}
            SarNorm::Global { mean, std } => {
                sar_patch.iter_mut().for_each(|v| *v = ((*v as f64 - mean) / std) as f32);
            }
            SarNorm::PerPatch => {
                let n = sar_patch.len() as f64;
                let mean = sar_patch.iter().map(|&v| v as f64).sum::<f64>() / n;
                let var = sar_patch
                    .iter()
                    .map(|&v| (v as f64 - mean) * (v as f64 - mean))
                    .sum::<f64>()
                    / n;
                let std = var.sqrt().max(1e-12);
                sar_patch.iter_mut().for_each(|v| *v = ((*v as f64 - mean) / std) as f32);
            }
        }
        let mut dsm_patch = extract_patch(&dsm, centroid, ps);
        if manifest.dsm_relative {
            subtract_median(&mut dsm_patch);
        }
        let mask_patch = extract_mask_patch(&sar, &f.polygon, centroid, ps);
        let idx = nearest_point(centroid, &gem.records)?;
        let gem_features = apply_gem_norm(&gem.records[idx].attributes, &manifest.gem_norm);
        samples.push(Sample {
            sar_patch,
            dsm_patch,
            mask_patch,
            gem_features,
            label: 0,
            city: "-".into(),
            building_id: f.id().to_string(),
        });
    }

    let refs: Vec<&Sample> = samples.iter().collect();
    let preds = score_samples(&mut model, &refs, recipe.batch).map_err(CliError::from)?;

    let out_feats: Vec<Feature> = feats
        .iter()
        .zip(&preds)
        .map(|(f, p)| {
            let mut properties = f.properties.clone();
            properties.insert("damage_prob".into(), json!(p.score));
            properties.insert("damaged".into(), json!(p.score >= recipe.threshold));
            Feature { polygon: f.polygon.clone(), properties }
        })
        .collect();
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_feature_collection(&out_feats, &args.out)?;
    eprintln!(
        "scored {} buildings, {} above threshold {}",
        preds.len(),
        preds.iter().filter(|p| p.score >= recipe.threshold).count(),
        recipe.threshold
    );

    let out_dir = args.out.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
    let hashes = vec![
        ("footprints".to_string(), sha256_file(&recipe.footprints)?),
        ("sar".to_string(), sha256_file(&recipe.sar)?),
        ("dsm".to_string(), sha256_file(&recipe.dsm)?),
        ("gem".to_string(), sha256_file(&recipe.gem)?),
        ("dataset/manifest.json".to_string(), sha256_file(&recipe.dataset.join("manifest.json"))?),
        ("checkpoint".to_string(), sha256_file(&recipe.checkpoint)?),
    ];
    write_run_json(&out_dir, "predict", &recipe, &hashes)?;
    Ok(())
}
