//! Turns per-city scene inputs (SAR and DSM rasters, footprint and
//! destroyed-building vectors, exposure tables) into the labeled, sampled,
//! serialized patch dataset: overlap-ratio labeling, nearest-point exposure
//! joins, 32x32 patch extraction, 1:20 negative sampling, per-feature
//! normalization, and a binary sample store.

mod build;
mod error;
mod gemjoin;
mod label;
mod patch;
mod sample;
mod store;
mod types;

pub use build::{build_dataset, BuiltDataset, CityInputs};
pub use error::DatasetError;
pub use gemjoin::{apply_gem_norm, gem_stats, join_gem, normalize_gem};
pub use label::label_buildings;
pub use patch::{extract_mask_patch, extract_patch, patch_window, subtract_median};
pub use sample::sample_negatives;
pub use store::{read_store, write_store};
pub use types::{
    BuildingRecord, CityCount, DatasetConfig, DatasetManifest, GemNormStat, Sample, SarNorm,
    SarNormMode,
};
