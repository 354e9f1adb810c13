//! Deterministic generator of synthetic multi-city earthquake scenes in the
//! toolkit's interchange formats: gamma-speckled SAR-like amplitude
//! rasters, DSMs, rectangular building footprints, destroyed-building
//! polygons, and neighborhood exposure tables. Damage signal strength is
//! configurable per modality (`s_sar`, `s_dsm`, `s_gem`) so fusion benefits
//! are testable: at 0 a modality carries no label information, at 1 it is
//! maximally informative.

mod campaign;
mod city;
mod config;
mod error;

pub use campaign::{generate_campaign, CampaignManifest};
pub use city::{generate_city, BuildingTruth, SyntheticTruth};
pub use config::SceneConfig;
pub use error::SynthError;
