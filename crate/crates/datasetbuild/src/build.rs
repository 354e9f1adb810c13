use std::path::{Path, PathBuf};

use rayon::prelude::*;

use geocore::{read_ascii_grid, read_feature_collection, read_point_table, Raster};

use crate::error::DatasetError;
use crate::gemjoin::{apply_gem_norm, gem_stats, join_gem};
use crate::label::label_buildings;
use crate::patch::{extract_mask_patch, extract_patch, subtract_median};
use crate::sample::sample_negatives;
use crate::store::write_store;
use crate::types::{
    BuildingRecord, CityCount, DatasetConfig, DatasetManifest, Sample, SarNorm, SarNormMode,
};

/// The five per-city scene files the pipeline consumes.
#[derive(Debug, Clone)]
pub struct CityInputs {
    pub city: String,
    pub sar: PathBuf,
    pub dsm: PathBuf,
    pub footprints: PathBuf,
    pub destroyed: PathBuf,
    pub gem: PathBuf,
}

impl CityInputs {
    /// Standard layout: `<dir>/{sar.asc,dsm.asc,footprints.geojson,
    /// destroyed.geojson,gem.csv}` with the city named after the directory.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let dir = dir.as_ref();
        let city = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "city".to_string());
        Ok(CityInputs {
            city,
            sar: dir.join("sar.asc"),
            dsm: dir.join("dsm.asc"),
            footprints: dir.join("footprints.geojson"),
            destroyed: dir.join("destroyed.geojson"),
            gem: dir.join("gem.csv"),
        })
    }
}

/// In-memory result of a dataset build, already persisted to the store
/// directory when one was given.
#[derive(Debug)]
pub struct BuiltDataset {
    pub manifest: DatasetManifest,
    pub samples: Vec<Sample>,
}

/// End-to-end dataset construction over one or more cities: enumerate
/// footprints, label them against the destroyed layer, join exposure
/// attributes, subsample intact buildings, extract the patch modalities,
/// normalize, and (optionally) write the sample store.
pub fn build_dataset(
    cities: &[CityInputs],
    config: &DatasetConfig,
    out_dir: Option<&Path>,
) -> Result<BuiltDataset, DatasetError> {
    assert!(config.patch_size % 2 == 0, "patch size must be even");
    let mut selected: Vec<(BuildingRecord, usize)> = Vec::new(); // (record, city raster slot)
    let mut rasters: Vec<(Raster, Raster)> = Vec::new();

    for inputs in cities {
        let sar = read_ascii_grid(&inputs.sar)?;
        let dsm = read_ascii_grid(&inputs.dsm)?;
        let feats = read_feature_collection(&inputs.footprints)?;
        let destroyed_feats = read_feature_collection(&inputs.destroyed)?;
        let gem = read_point_table(&inputs.gem)?;

        let mut records = Vec::with_capacity(feats.len());
        for f in &feats {
            let centroid = f.polygon.centroid()?;
            records.push(BuildingRecord {
                id: f.id().to_string(),
                footprint: f.polygon.clone(),
                centroid,
                city: inputs.city.clone(),
                label: 0,
                gem_vector: Vec::new(),
            });
        }
        let destroyed: Vec<_> = destroyed_feats.into_iter().map(|f| f.polygon).collect();
        if destroyed.is_empty() {
            eprintln!(
                "warning: city {} has an empty destroyed layer; no positives will be sampled",
                inputs.city
            );
        }
        let mut records = label_buildings(records, &destroyed, config.overlap_threshold)?;
        join_gem(&mut records, &gem)?;

        let slot = rasters.len();
        rasters.push((sar, dsm));
        let city_selected = sample_negatives(records, config.ratio, config.seed);
        selected.extend(city_selected.into_iter().map(|r| (r, slot)));
    }

    selected.sort_by(|a, b| (&a.0.city, &a.0.id).cmp(&(&b.0.city, &b.0.id)));

    // patch extraction is pure per-record work
    let ps = config.patch_size;
    let mut samples: Vec<Sample> = selected
        .par_iter()
        .map(|(rec, slot)| {
            let (sar, dsm) = &rasters[*slot];
            let mut sar_patch = extract_patch(sar, rec.centroid, ps);
            if config.sar_db {
                sar_patch.iter_mut().for_each(|v| *v = 10.0 * (*v + 1e-6).log10());
            }
            let mut dsm_patch = extract_patch(dsm, rec.centroid, ps);
            if config.dsm_relative {
                subtract_median(&mut dsm_patch);
            }
            let mask_patch = extract_mask_patch(sar, &rec.footprint, rec.centroid, ps);
            Sample {
                sar_patch,
                dsm_patch,
                mask_patch,
                gem_features: Vec::new(),
                label: rec.label,
                city: rec.city.clone(),
                building_id: rec.id.clone(),
            }
        })
        .collect();

    for ((rec, _), sample) in selected.iter().zip(&samples) {
        if sample.sar_patch.iter().all(|&v| v == 0.0) {
            eprintln!(
                "warning: building {} ({}) has an all-zero SAR patch (outside raster?)",
                rec.id, rec.city
            );
        }
    }

    // SAR normalization
    let sar_norm = match config.sar_norm {
        SarNormMode::None => SarNorm::None,
        SarNormMode::Global => {
            let n = (samples.len() * ps * ps).max(1) as f64;
            let mean = samples
                .iter()
                .flat_map(|s| s.sar_patch.iter())
                .map(|&v| v as f64)
                .sum::<f64>()
                / n;
            let var = samples
                .iter()
                .flat_map(|s| s.sar_patch.iter())
                .map(|&v| (v as f64 - mean) * (v as f64 - mean))
                .sum::<f64>()
                / n;
            let std = var.sqrt().max(1e-12);
            for s in &mut samples {
                s.sar_patch.iter_mut().for_each(|v| *v = ((*v as f64 - mean) / std) as f32);
            }
            SarNorm::Global { mean, std }
        }
        SarNormMode::PerPatch => {
            for s in &mut samples {
                let n = s.sar_patch.len() as f64;
                let mean = s.sar_patch.iter().map(|&v| v as f64).sum::<f64>() / n;
                let var = s
                    .sar_patch
                    .iter()
                    .map(|&v| (v as f64 - mean) * (v as f64 - mean))
                    .sum::<f64>()
                    / n;
                let std = var.sqrt().max(1e-12);
                s.sar_patch.iter_mut().for_each(|v| *v = ((*v as f64 - mean) / std) as f32);
            }
            SarNorm::PerPatch
        }
    };

    // exposure normalization over the selected (training) records
    let g = selected.first().map(|(r, _)| r.gem_vector.len()).unwrap_or(0);
    let gem_norm = if selected.len() >= 2 {
        let records: Vec<BuildingRecord> = selected.iter().map(|(r, _)| r.clone()).collect();
        let stats = gem_stats(&records)?;
        for ((rec, _), sample) in selected.iter().zip(&mut samples) {
            sample.gem_features = apply_gem_norm(&rec.gem_vector, &stats);
        }
        stats
    } else {
        eprintln!("warning: fewer than 2 samples selected; exposure features stored as zeros");
        for sample in &mut samples {
            sample.gem_features = vec![0.0; g];
        }
        Vec::new()
    };

    let mut city_names: Vec<String> = cities.iter().map(|c| c.city.clone()).collect();
    city_names.sort();
    city_names.dedup();
    let per_city: Vec<CityCount> = city_names
        .iter()
        .map(|city| CityCount {
            city: city.clone(),
            intact: samples.iter().filter(|s| &s.city == city && s.label == 0).count(),
            damaged: samples.iter().filter(|s| &s.city == city && s.label == 1).count(),
        })
        .collect();

    let manifest = DatasetManifest {
        patch_size: ps,
        g,
        gem_norm,
        per_city,
        seed: config.seed,
        ratio: config.ratio,
        record_count: samples.len(),
        sar: sar_norm,
        sar_db: config.sar_db,
        dsm_relative: config.dsm_relative,
        cities: city_names,
        building_ids: samples.iter().map(|s| s.building_id.clone()).collect(),
    };

    if let Some(dir) = out_dir {
        write_store(dir, &manifest, &samples)?;
    }
    Ok(BuiltDataset { manifest, samples })
}
