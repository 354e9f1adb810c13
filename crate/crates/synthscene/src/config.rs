use serde::{Deserialize, Serialize};

use crate::error::SynthError;

/// Default street-grid lot pitch in meters; one building per occupied lot.
pub(crate) const DEFAULT_LOT_PITCH: f64 = 25.0;
/// Exposure cell pitch: one table point per 250 m cell.
pub(crate) const GEM_CELL: f64 = 250.0;

fn default_lot_pitch() -> f64 {
    DEFAULT_LOT_PITCH
}

/// Parameters of one synthetic city.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub city: String,
    /// Square scene extent in meters.
    pub extent_m: f64,
    pub sar_pixel_m: f64,
    pub dsm_pixel_m: f64,
    pub building_count: usize,
    /// Fraction of buildings assigned the damaged label, in (0, 1).
    pub damage_rate: f64,
    /// Damage signal strengths per modality, each in [0, 1].
    pub s_sar: f64,
    pub s_dsm: f64,
    pub s_gem: f64,
    /// Speckle looks L: background amplitude^2 is gamma with this shape.
    pub speckle_looks: u32,
    /// Street-grid lot pitch in meters. At the default 25 m an 80 m patch
    /// window covers several neighbors; a pitch above ~85 m isolates the
    /// centered building the way the patch contract intends.
    #[serde(default = "default_lot_pitch")]
    pub lot_pitch_m: f64,
    pub seed: u64,
}

impl SceneConfig {
    /// A config whose extent fits `building_count` lots, with the standard
    /// 2.5 m SAR / 5 m DSM pixel sizes and the given lot pitch.
    pub fn sized_for_pitch(
        city: &str,
        building_count: usize,
        damage_rate: f64,
        lot_pitch_m: f64,
        seed: u64,
    ) -> Self {
        let n_side = (building_count as f64).sqrt().ceil() as usize + 1;
        SceneConfig {
            city: city.to_string(),
            extent_m: n_side as f64 * lot_pitch_m,
            sar_pixel_m: 2.5,
            dsm_pixel_m: 5.0,
            building_count,
            damage_rate,
            s_sar: 0.8,
            s_dsm: 0.6,
            s_gem: 0.6,
            speckle_looks: 4,
            lot_pitch_m,
            seed,
        }
    }

    /// [`Self::sized_for_pitch`] at the default dense 25 m pitch.
    pub fn sized_for(city: &str, building_count: usize, damage_rate: f64, seed: u64) -> Self {
        Self::sized_for_pitch(city, building_count, damage_rate, DEFAULT_LOT_PITCH, seed)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.damage_rate > 0.0 && self.damage_rate < 1.0) {
            return Err(SynthError::Config(format!(
                "damage rate {} not in (0, 1)",
                self.damage_rate
            )));
        }
        if self.extent_m <= 0.0 || self.sar_pixel_m <= 0.0 || self.dsm_pixel_m <= 0.0 {
            return Err(SynthError::Config("extent and pixel sizes must be positive".into()));
        }
        for (name, s) in [("s_sar", self.s_sar), ("s_dsm", self.s_dsm), ("s_gem", self.s_gem)] {
            if !(0.0..=1.0).contains(&s) {
                return Err(SynthError::Config(format!("{name} = {s} not in [0, 1]")));
            }
        }
        if self.speckle_looks == 0 {
            return Err(SynthError::Config("speckle looks must be >= 1".into()));
        }
        if self.lot_pitch_m < 24.0 {
            return Err(SynthError::Config(format!(
                "lot pitch {} m cannot fit a building with margins",
                self.lot_pitch_m
            )));
        }
        Ok(())
    }

    pub(crate) fn lots_per_side(&self) -> usize {
        (self.extent_m / self.lot_pitch_m).floor() as usize
    }
}
