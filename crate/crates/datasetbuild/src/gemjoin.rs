use geocore::{nearest_point, PointTable};

use crate::error::DatasetError;
use crate::types::{BuildingRecord, GemNormStat};

/// Attach to every record the attribute vector of its nearest exposure
/// point. The association is total: every record gets a vector.
pub fn join_gem(
    records: &mut [BuildingRecord],
    table: &PointTable,
) -> Result<(), DatasetError> {
    for rec in records.iter_mut() {
        let idx = nearest_point(rec.centroid, &table.records)?;
        rec.gem_vector = table.records[idx].attributes.clone();
    }
    Ok(())
}

/// Population mean/std per exposure feature; features with std below 1e-12
/// are flagged constant.
pub fn gem_stats(records: &[BuildingRecord]) -> Result<Vec<GemNormStat>, DatasetError> {
    if records.len() < 2 {
        return Err(DatasetError::TooFewRecords(records.len()));
    }
    let g = records[0].gem_vector.len();
    let n = records.len() as f64;
    let mut stats = Vec::with_capacity(g);
    for f in 0..g {
        let mean = records.iter().map(|r| r.gem_vector[f]).sum::<f64>() / n;
        let var = records
            .iter()
            .map(|r| {
                let d = r.gem_vector[f] - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        stats.push(GemNormStat { mean, std, constant: std < 1e-12 });
    }
    Ok(stats)
}

/// Z-score one raw vector with stored statistics; constant features map
/// to 0.
pub fn apply_gem_norm(raw: &[f64], stats: &[GemNormStat]) -> Vec<f32> {
    raw.iter()
        .zip(stats)
        .map(|(&v, s)| {
            if s.constant {
                0.0
            } else {
                ((v - s.mean) / s.std) as f32
            }
        })
        .collect()
}

/// Z-score every record's exposure vector with statistics computed from
/// these records (the training portion); returns the normalized vectors in
/// record order alongside the statistics for the manifest.
pub fn normalize_gem(
    records: &[BuildingRecord],
) -> Result<(Vec<Vec<f32>>, Vec<GemNormStat>), DatasetError> {
    let stats = gem_stats(records)?;
    let normalized = records
        .iter()
        .map(|r| apply_gem_norm(&r.gem_vector, &stats))
        .collect();
    Ok((normalized, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use geocore::{PointRecord, Polygon};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn building_at(x: f64, y: f64) -> BuildingRecord {
        BuildingRecord {
            id: format!("{x}_{y}"),
            footprint: Polygon::rect(x, y, x + 1.0, y + 1.0),
            centroid: (x, y),
            city: "c".into(),
            label: 0,
            gem_vector: vec![],
        }
    }

    fn table(points: Vec<(f64, f64, Vec<f64>)>) -> PointTable {
        PointTable {
            attribute_names: vec!["a".into()],
            records: points
                .into_iter()
                .map(|(x, y, attributes)| PointRecord { x, y, attributes })
                .collect(),
        }
    }

    #[test]
    fn single_point_joins_everywhere() {
        let mut recs = vec![building_at(0.0, 0.0), building_at(100.0, 50.0)];
        let t = table(vec![(5.0, 5.0, vec![7.0, 8.0])]);
        join_gem(&mut recs, &t).unwrap();
        assert!(recs.iter().all(|r| r.gem_vector == vec![7.0, 8.0]));
    }

    #[test]
    fn two_points_split_by_bisector() {
        let t = table(vec![(0.0, 0.0, vec![1.0]), (10.0, 0.0, vec![2.0])]);
        let mut recs = vec![building_at(2.0, 3.0), building_at(8.0, -1.0)];
        join_gem(&mut recs, &t).unwrap();
        assert_eq!(recs[0].gem_vector, vec![1.0]);
        assert_eq!(recs[1].gem_vector, vec![2.0]);
    }

    #[test]
    fn random_join_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<(f64, f64, Vec<f64>)> = (0..50)
            .map(|i| (rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0), vec![i as f64]))
            .collect();
        let t = table(pts.clone());
        let mut recs: Vec<BuildingRecord> = (0..500)
            .map(|_| building_at(rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0)))
            .collect();
        join_gem(&mut recs, &t).unwrap();
        for r in &recs {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, p) in pts.iter().enumerate() {
                let d = (p.0 - r.centroid.0).hypot(p.1 - r.centroid.1);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            assert_eq!(r.gem_vector, pts[best].2);
        }
    }

    #[test]
    fn zscore_hand_oracle() {
        let mut recs: Vec<BuildingRecord> = (0..3).map(|i| building_at(i as f64, 0.0)).collect();
        for (i, r) in recs.iter_mut().enumerate() {
            r.gem_vector = vec![(i + 1) as f64];
        }
        let (norm, stats) = normalize_gem(&recs).unwrap();
        assert!((stats[0].mean - 2.0).abs() < 1e-12);
        assert!((stats[0].std - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((norm[0][0] as f64 + 1.224744871391589).abs() < 1e-6);
        assert!((norm[1][0] as f64).abs() < 1e-12);
        assert!((norm[2][0] as f64 - 1.224744871391589).abs() < 1e-6);
    }

    #[test]
    fn constant_feature_flagged_and_zeroed() {
        let mut recs: Vec<BuildingRecord> = (0..4).map(|i| building_at(i as f64, 0.0)).collect();
        for r in recs.iter_mut() {
            r.gem_vector = vec![5.5, 1.0];
        }
        recs[1].gem_vector[1] = 3.0;
        let (norm, stats) = normalize_gem(&recs).unwrap();
        assert!(stats[0].constant);
        assert!(!stats[1].constant);
        assert!(norm.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn stored_stats_reproduce_normalization_bit_identically() {
        let mut recs: Vec<BuildingRecord> = (0..10).map(|i| building_at(i as f64, 0.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for r in recs.iter_mut() {
            r.gem_vector = vec![rng.gen_range(-3.0..9.0), rng.gen_range(0.0..1.0)];
        }
        let (norm, stats) = normalize_gem(&recs).unwrap();
        for (r, n) in recs.iter().zip(&norm) {
            assert_eq!(&apply_gem_norm(&r.gem_vector, &stats), n);
        }
    }
}
