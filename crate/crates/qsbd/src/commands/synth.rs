use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use synthscene::{generate_campaign, SceneConfig};

use crate::cli_error::CliError;
use crate::recipe::{apply_config_file, hash_dir, write_run_json};

#[derive(Debug, Args)]
pub struct SynthGenArgs {
    /// Output campaign directory (one subdirectory per city).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of auto-named cities (ignored when --city-spec is given).
    #[arg(long, default_value_t = 2)]
    pub cities: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Buildings per auto-named city.
    #[arg(long, default_value_t = 400)]
    pub buildings: usize,
    /// Damage rate per auto-named city.
    #[arg(long, default_value_t = 0.1)]
    pub damage_rate: f64,
    /// Explicit city specs `name:buildings:damaged`, repeatable; overrides
    /// --cities/--buildings/--damage-rate.
    #[arg(long = "city-spec")]
    pub city_specs: Vec<String>,
    #[arg(long, default_value_t = 0.8)]
    pub s_sar: f64,
    #[arg(long, default_value_t = 0.6)]
    pub s_dsm: f64,
    #[arg(long, default_value_t = 0.6)]
    pub s_gem: f64,
    /// Speckle looks L.
    #[arg(long, default_value_t = 4)]
    pub looks: u32,
    /// Street-grid lot pitch in meters; pitches above ~85 isolate each
    /// building within its own patch window.
    #[arg(long, default_value_t = 25.0)]
    pub lot_pitch: f64,
    /// JSON config file overriding the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthRecipe {
    pub seed: u64,
    pub cities: Vec<SceneConfig>,
}

fn parse_city_spec(spec: &str) -> Result<(String, usize, usize), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!(
            "bad --city-spec {spec:?}, expected name:buildings:damaged"
        )));
    }
    let buildings: usize = parts[1]
        .parse()
        .map_err(|e| CliError::config(format!("bad building count in {spec:?}: {e}")))?;
    let damaged: usize = parts[2]
        .parse()
        .map_err(|e| CliError::config(format!("bad damaged count in {spec:?}: {e}")))?;
    if damaged == 0 || damaged >= buildings {
        return Err(CliError::config(format!(
            "--city-spec {spec:?}: damaged must be in 1..buildings"
        )));
    }
    Ok((parts[0].to_string(), buildings, damaged))
}

pub fn run(args: SynthGenArgs) -> Result<(), CliError> {
    let mut cities = Vec::new();
    if args.city_specs.is_empty() {
        if args.cities < 2 {
            return Err(CliError::config("--cities must be at least 2"));
        }
        for i in 0..args.cities {
            let name = format!("city_{}", (b'a' + (i % 26) as u8) as char);
            let name = if i >= 26 { format!("{name}{}", i / 26) } else { name };
            let mut cfg =
                SceneConfig::sized_for_pitch(&name, args.buildings, args.damage_rate, args.lot_pitch, 0);
            cfg.s_sar = args.s_sar;
            cfg.s_dsm = args.s_dsm;
            cfg.s_gem = args.s_gem;
            cfg.speckle_looks = args.looks;
            cities.push(cfg);
        }
    } else {
        for spec in &args.city_specs {
            let (name, buildings, damaged) = parse_city_spec(spec)?;
            let mut cfg = SceneConfig::sized_for_pitch(
                &name,
                buildings,
                damaged as f64 / buildings as f64,
                args.lot_pitch,
                0,
            );
            cfg.s_sar = args.s_sar;
            cfg.s_dsm = args.s_dsm;
            cfg.s_gem = args.s_gem;
            cfg.speckle_looks = args.looks;
            cities.push(cfg);
        }
    }

    let recipe = apply_config_file(
        SynthRecipe { seed: args.seed, cities },
        args.config.as_deref(),
    )?;

    let manifest = generate_campaign(&args.out, recipe.seed, &recipe.cities)?;
    for c in &manifest.cities {
        eprintln!(
            "generated {}: {} buildings, damage rate {:.4}",
            c.city, c.building_count, c.damage_rate
        );
    }
    let hashes = hash_dir(&args.out)?;
    write_run_json(&args.out, "synth-gen", &recipe, &hashes)?;
    Ok(())
}
