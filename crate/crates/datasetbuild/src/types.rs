use geocore::Polygon;
use serde::{Deserialize, Serialize};

/// One enumerated building before patch extraction.
#[derive(Debug, Clone)]
pub struct BuildingRecord {
    pub id: String,
    pub footprint: Polygon,
    pub centroid: (f64, f64),
    pub city: String,
    /// 1 = damaged.
    pub label: u8,
    /// Raw exposure attributes, joined from the nearest table point.
    pub gem_vector: Vec<f64>,
}

/// The four network inputs plus label for one building.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub sar_patch: Vec<f32>,
    pub mask_patch: Vec<u8>,
    pub dsm_patch: Vec<f32>,
    pub gem_features: Vec<f32>,
    pub label: u8,
    pub city: String,
    pub building_id: String,
}

/// Per-feature normalization statistics (population style, divide by n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GemNormStat {
    pub mean: f64,
    pub std: f64,
    /// std below 1e-12: the feature is constant and normalizes to 0.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityCount {
    pub city: String,
    pub intact: usize,
    pub damaged: usize,
}

/// How SAR patch intensities are normalized when stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SarNormMode {
    None,
    Global,
    PerPatch,
}

/// Resolved SAR normalization recorded in the manifest; `Global` carries
/// the dataset statistics so inference never recomputes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SarNorm {
    None,
    Global { mean: f64, std: f64 },
    PerPatch,
}

/// Dataset build knobs. The 1:20 sampling ratio is a default, not a
/// constant, to allow sensitivity studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub patch_size: usize,
    pub ratio: usize,
    pub seed: u64,
    /// Apply 10*log10(v + 1e-6) to SAR patch values.
    pub sar_db: bool,
    pub sar_norm: SarNormMode,
    /// Store DSM patches as elevation minus the patch median.
    pub dsm_relative: bool,
    /// A footprint counts as destroyed when intersection area / min(area)
    /// reaches this fraction.
    pub overlap_threshold: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            patch_size: 32,
            ratio: 20,
            seed: 0,
            sar_db: false,
            sar_norm: SarNormMode::None,
            dsm_relative: true,
            overlap_threshold: 0.5,
        }
    }
}

/// Store-level metadata: schema parameters, normalization statistics,
/// per-city class counts, and the string tables for the binary record
/// encoding. Keys serialize in declaration order, so the JSON is stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub patch_size: usize,
    pub g: usize,
    pub gem_norm: Vec<GemNormStat>,
    pub per_city: Vec<CityCount>,
    pub seed: u64,
    pub ratio: usize,
    pub record_count: usize,
    pub sar: SarNorm,
    pub sar_db: bool,
    pub dsm_relative: bool,
    /// City string table for the u16 city index, sorted.
    pub cities: Vec<String>,
    /// Building-id string table for the u32 id index, in record order.
    pub building_ids: Vec<String>,
}

impl DatasetManifest {
    /// Fixed byte size of one record given the manifest schema.
    pub fn record_size(&self) -> usize {
        let ps2 = self.patch_size * self.patch_size;
        ps2 * 4 + ps2 * 4 + ps2 + self.g * 4 + 1 + 2 + 4
    }
}
