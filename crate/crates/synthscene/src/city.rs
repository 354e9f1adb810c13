use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use geocore::{
    write_ascii_grid, write_feature_collection, write_point_table, Feature, GeoTransform,
    PointRecord, PointTable, Polygon, Raster,
};

use crate::config::{SceneConfig, GEM_CELL};
use crate::error::SynthError;

const ROOF_FACTOR: f64 = 1.6;
const STRIPE_FACTOR: f64 = 6.0;
const STRIPE_WIDTH_M: f64 = 5.0;

/// Ground truth for one generated building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingTruth {
    pub id: String,
    pub damaged: bool,
    pub height_m: f64,
    pub construction_decade: u32,
    pub exposure_cell: (i64, i64),
}

/// Ground truth for a generated city, consistent with the emitted
/// destroyed-building layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    pub city: String,
    pub seed: u64,
    pub buildings: Vec<BuildingTruth>,
}

struct Building {
    id: String,
    // axis-aligned footprint corners
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    height: f64,
    damaged: bool,
    collapse_frac: f64,
    cell: (i64, i64),
}

struct GemCell {
    cx: f64,
    cy: f64,
    vulnerability: f64,
    attributes: Vec<f64>,
}

/// Generate one city: five scene files plus `truth.json` in `dir`.
/// Identical configs produce byte-identical outputs.
pub fn generate_city(cfg: &SceneConfig, dir: impl AsRef<Path>) -> Result<SyntheticTruth, SynthError> {
    cfg.validate()?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // phase 1: exposure cells
    let n_cells = (cfg.extent_m / GEM_CELL).ceil().max(1.0) as i64;
    let mut cells = Vec::new();
    let normal05 = Normal::new(0.0, 0.05).unwrap();
    for gy in 0..n_cells {
        for gx in 0..n_cells {
            let v: f64 = rng.gen();
            let frac_pre1980 = (0.15 + 0.7 * v + normal05.sample(&mut rng)).clamp(0.0, 1.0);
            let frac_masonry = (0.10 + 0.6 * v + normal05.sample(&mut rng)).clamp(0.0, 1.0);
            let frac_rc = 1.0 - frac_masonry;
            let replacement_cost = (3.0 - 1.5 * v + 0.2 * rng.gen::<f64>()).max(0.2);
            let occupancy = 2.0 + 3.0 * rng.gen::<f64>();
            cells.push(GemCell {
                cx: (gx as f64 + 0.5) * GEM_CELL,
                cy: (gy as f64 + 0.5) * GEM_CELL,
                vulnerability: v,
                attributes: vec![frac_pre1980, frac_masonry, frac_rc, replacement_cost, occupancy],
            });
        }
    }
    let cell_at = |x: f64, y: f64| -> (i64, i64) {
        (
            ((x / GEM_CELL).floor() as i64).clamp(0, n_cells - 1),
            ((y / GEM_CELL).floor() as i64).clamp(0, n_cells - 1),
        )
    };
    let cell_index = |cell: (i64, i64)| (cell.1 * n_cells + cell.0) as usize;

    // phase 2: building placement on the street grid
    let lots_side = cfg.lots_per_side();
    let lots = lots_side * lots_side;
    if cfg.building_count > lots {
        return Err(SynthError::PlacementOverflow {
            requested: cfg.building_count,
            lots,
            extent: cfg.extent_m,
        });
    }
    let mut lot_order: Vec<usize> = (0..lots).collect();
    lot_order.shuffle(&mut rng);
    let pitch = cfg.lot_pitch_m;
    let mut buildings = Vec::with_capacity(cfg.building_count);
    for (i, &lot) in lot_order.iter().take(cfg.building_count).enumerate() {
        let lx = (lot % lots_side) as f64 * pitch;
        let ly = (lot / lots_side) as f64 * pitch;
        let w = rng.gen_range(10.0..18.0);
        let h = rng.gen_range(8.0..16.0);
        let slack_x = (pitch - w - 4.0).min(16.0);
        let slack_y = (pitch - h - 4.0).min(16.0);
        let x0 = lx + 2.0 + rng.gen_range(0.0..slack_x.max(1e-9));
        let y0 = ly + 2.0 + rng.gen_range(0.0..slack_y.max(1e-9));
        let height = rng.gen_range(3.0..30.0);
        let collapse_frac = rng.gen_range(0.6..1.0);
        buildings.push(Building {
            id: format!("{}_{i:05}", cfg.city),
            x0,
            y0,
            x1: x0 + w,
            y1: y0 + h,
            height,
            damaged: false,
            collapse_frac,
            cell: cell_at(x0 + w / 2.0, y0 + h / 2.0),
        });
    }

    // phase 3: damage assignment, tilted toward vulnerable cells by s_gem.
    // weights have unit mean over the vulnerability distribution, so s_gem
    // does not change the expected damage count.
    let n_damaged = (cfg.damage_rate * cfg.building_count as f64).round() as usize;
    let mut keyed: Vec<(f64, usize)> = buildings
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let v = cells[cell_index(b.cell)].vulnerability;
            let w = ((1.0 - cfg.s_gem) + 2.0 * cfg.s_gem * v).max(1e-6);
            let u: f64 = rng.gen_range(1e-12..1.0);
            (u.powf(1.0 / w), i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, i) in keyed.iter().take(n_damaged) {
        buildings[i].damaged = true;
    }

    // phase 4: construction decades from the cell age mix
    let decades = [1960u32, 1970, 1980, 1990, 2000];
    let truth_decades: Vec<u32> = buildings
        .iter()
        .map(|b| {
            let pre = cells[cell_index(b.cell)].attributes[0];
            if rng.gen::<f64>() < pre {
                if rng.gen::<f64>() < 0.5 {
                    decades[0]
                } else {
                    decades[1]
                }
            } else {
                decades[2 + rng.gen_range(0..3)]
            }
        })
        .collect();

    // phase 5: SAR amplitude raster
    let sar_n = (cfg.extent_m / cfg.sar_pixel_m).ceil() as usize;
    let sar_t = GeoTransform::square(0.0, sar_n as f64 * cfg.sar_pixel_m, cfg.sar_pixel_m);
    let mut mean_map = vec![1.0f64; sar_n * sar_n];
    let texture_sigma = 0.8 * cfg.s_sar;
    for b in &buildings {
        let stripe_factor = if b.damaged {
            STRIPE_FACTOR - cfg.s_sar * (STRIPE_FACTOR - 1.0)
        } else {
            STRIPE_FACTOR
        };
        let (c0, r0) = pixel_of(&sar_t, b.x0, b.y1, sar_n);
        let (c1, r1) = pixel_of(&sar_t, b.x1, b.y0, sar_n);
        for row in r0..=r1 {
            let py = sar_t.origin_y - (row as f64 + 0.5) * cfg.sar_pixel_m;
            for col in c0..=c1 {
                let px = (col as f64 + 0.5) * cfg.sar_pixel_m;
                if px <= b.x0 || px >= b.x1 || py <= b.y0 || py >= b.y1 {
                    continue;
                }
                let mut m = if px - b.x0 < STRIPE_WIDTH_M { stripe_factor } else { ROOF_FACTOR };
                if b.damaged && texture_sigma > 0.0 {
                    // mean-preserving lognormal rubble texture
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    m *= (texture_sigma * z - 0.5 * texture_sigma * texture_sigma).exp();
                }
                mean_map[row * sar_n + col] = m;
            }
        }
    }
    let gamma = Gamma::new(cfg.speckle_looks as f64, 1.0 / cfg.speckle_looks as f64).unwrap();
    let sar_values: Vec<f32> = mean_map
        .iter()
        .map(|&m| ((m * gamma.sample(&mut rng)).sqrt()) as f32)
        .collect();
    let sar = Raster::new(sar_n, sar_n, sar_t, None, sar_values)?;
    write_ascii_grid(&sar, dir.join("sar.asc"))?;

    // phase 6: DSM raster (terrain + standing structure + noise).
    // Buildings never leave their lot, so a lot-grid lookup finds the only
    // candidate per pixel.
    let mut lot_building: Vec<Option<usize>> = vec![None; lots];
    for (i, b) in buildings.iter().enumerate() {
        let lot_col = (b.x0 / pitch).floor() as usize;
        let lot_row = (b.y0 / pitch).floor() as usize;
        lot_building[lot_row * lots_side + lot_col] = Some(i);
    }
    let dsm_n = (cfg.extent_m / cfg.dsm_pixel_m).ceil() as usize;
    let dsm_t = GeoTransform::square(0.0, dsm_n as f64 * cfg.dsm_pixel_m, cfg.dsm_pixel_m);
    let mut dsm_values = Vec::with_capacity(dsm_n * dsm_n);
    let noise = Normal::new(0.0, 0.4).unwrap();
    for row in 0..dsm_n {
        let y = dsm_t.origin_y - (row as f64 + 0.5) * cfg.dsm_pixel_m;
        for col in 0..dsm_n {
            let x = (col as f64 + 0.5) * cfg.dsm_pixel_m;
            let terrain = 80.0 + 0.01 * x + 6.0 * (x / 180.0).sin() * (y / 150.0).cos();
            let mut v = terrain;
            let lot_col = (x / pitch).floor() as usize;
            let lot_row = (y / pitch).floor() as usize;
            if lot_col < lots_side && lot_row < lots_side {
                if let Some(i) = lot_building[lot_row * lots_side + lot_col] {
                    let b = &buildings[i];
                    if x > b.x0 && x < b.x1 && y > b.y0 && y < b.y1 {
                        v += if b.damaged {
                            b.height * (1.0 - cfg.s_dsm * b.collapse_frac)
                        } else {
                            b.height
                        };
                    }
                }
            }
            dsm_values.push((v + noise.sample(&mut rng)) as f32);
        }
    }
    let dsm = Raster::new(dsm_n, dsm_n, dsm_t, None, dsm_values)?;
    write_ascii_grid(&dsm, dir.join("dsm.asc"))?;

    // phase 7: vector layers and exposure table
    let footprints: Vec<Feature> = buildings
        .iter()
        .map(|b| Feature {
            polygon: Polygon::rect(b.x0, b.y0, b.x1, b.y1),
            properties: props(&b.id),
        })
        .collect();
    write_feature_collection(&footprints, dir.join("footprints.geojson"))?;

    let mut destroyed = Vec::new();
    for b in &buildings {
        if !b.damaged {
            continue;
        }
        // jitter by at most 1 m euclidean
        let r = rng.gen_range(0.0..1.0);
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let (dx, dy) = (r * theta.cos(), r * theta.sin());
        destroyed.push(Feature {
            polygon: Polygon::rect(b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy),
            properties: props(&format!("d_{}", b.id)),
        });
    }
    write_feature_collection(&destroyed, dir.join("destroyed.geojson"))?;

    let table = PointTable {
        attribute_names: vec![
            "frac_pre1980".into(),
            "frac_masonry".into(),
            "frac_rc".into(),
            "replacement_cost_musd".into(),
            "avg_occupancy".into(),
        ],
        records: cells
            .iter()
            .map(|c| PointRecord { x: c.cx, y: c.cy, attributes: c.attributes.clone() })
            .collect(),
    };
    write_point_table(&table, dir.join("gem.csv"))?;

    let truth = SyntheticTruth {
        city: cfg.city.clone(),
        seed: cfg.seed,
        buildings: buildings
            .iter()
            .zip(&truth_decades)
            .map(|(b, &decade)| BuildingTruth {
                id: b.id.clone(),
                damaged: b.damaged,
                height_m: b.height,
                construction_decade: decade,
                exposure_cell: b.cell,
            })
            .collect(),
    };
    let mut truth_sorted = truth.clone();
    truth_sorted.buildings.sort_by(|a, b| a.id.cmp(&b.id));
    std::fs::write(dir.join("truth.json"), serde_json::to_vec_pretty(&truth_sorted)?)?;
    Ok(truth_sorted)
}

fn props(id: &str) -> serde_json::Map<String, serde_json::Value> {
    match json!({ "id": id }) {
        serde_json::Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// Clamped pixel index containing map point (x, y).
fn pixel_of(t: &GeoTransform, x: f64, y: f64, n: usize) -> (usize, usize) {
    let (c, r) = geocore::world_to_pixel(t, x, y);
    (
        (c.floor().max(0.0) as usize).min(n - 1),
        (r.floor().max(0.0) as usize).min(n - 1),
    )
}
