use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::city::generate_city;
use crate::config::SceneConfig;
use crate::error::SynthError;

/// Root manifest of a generated campaign: the campaign seed and the fully
/// resolved per-city configs (with derived seeds), enough to regenerate the
/// identical tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignManifest {
    pub seed: u64,
    pub cities: Vec<SceneConfig>,
}

fn mix_seed(campaign_seed: u64, city_index: u64) -> u64 {
    // splitmix64 over (seed, index) gives each city an independent stream
    let mut z = campaign_seed ^ (city_index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Generate one subdirectory per city under `out_dir`, plus
/// `campaign.json`. City RNG streams derive from (campaign seed, city
/// index), so output is independent of generation order.
pub fn generate_campaign(
    out_dir: impl AsRef<Path>,
    campaign_seed: u64,
    cities: &[SceneConfig],
) -> Result<CampaignManifest, SynthError> {
    if cities.len() < 2 {
        return Err(SynthError::TooFewCities(cities.len()));
    }
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;

    let mut resolved = Vec::with_capacity(cities.len());
    for (i, cfg) in cities.iter().enumerate() {
        let mut cfg = cfg.clone();
        cfg.seed = mix_seed(campaign_seed, i as u64);
        cfg.validate()?;
        generate_city(&cfg, out_dir.join(&cfg.city))?;
        resolved.push(cfg);
    }
    let manifest = CampaignManifest { seed: campaign_seed, cities: resolved };
    std::fs::write(out_dir.join("campaign.json"), serde_json::to_vec_pretty(&manifest)?)?;
    Ok(manifest)
}
