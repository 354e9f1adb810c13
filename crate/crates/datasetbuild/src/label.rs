use geocore::{polygon_intersection_area, Polygon};

use crate::error::DatasetError;
use crate::types::BuildingRecord;

/// Mark a building damaged when some destroyed polygon covers at least
/// `threshold` of the smaller of the two areas. The ratio rule tolerates
/// digitization offsets between the footprint and destroyed layers.
pub fn label_buildings(
    mut records: Vec<BuildingRecord>,
    destroyed: &[Polygon],
    threshold: f64,
) -> Result<Vec<BuildingRecord>, DatasetError> {
    let dest_boxes: Vec<(f64, f64, f64, f64)> = destroyed.iter().map(|d| d.bbox()).collect();
    let dest_areas: Vec<f64> = destroyed.iter().map(|d| d.area()).collect();

    for rec in &mut records {
        rec.label = 0;
        let fb = rec.footprint.bbox();
        let fa = rec.footprint.area();
        for (i, d) in destroyed.iter().enumerate() {
            let db = dest_boxes[i];
            if fb.2 < db.0 || db.2 < fb.0 || fb.3 < db.1 || db.3 < fb.1 {
                continue;
            }
            let inter = polygon_intersection_area(&rec.footprint, d)?;
            if inter / fa.min(dest_areas[i]) >= threshold {
                rec.label = 1;
                break;
            }
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn building(id: &str, poly: Polygon) -> BuildingRecord {
        let centroid = poly.centroid().unwrap();
        BuildingRecord {
            id: id.into(),
            footprint: poly,
            centroid,
            city: "c".into(),
            label: 0,
            gem_vector: vec![],
        }
    }

    #[test]
    fn identical_polygon_labels_damaged() {
        let fp = Polygon::rect(0.0, 0.0, 10.0, 8.0);
        let recs = label_buildings(vec![building("b", fp.clone())], &[fp], 0.5).unwrap();
        assert_eq!(recs[0].label, 1);
    }

    #[test]
    fn disjoint_polygons_stay_intact() {
        let fp = Polygon::rect(0.0, 0.0, 10.0, 8.0);
        let d = Polygon::rect(100.0, 100.0, 105.0, 105.0);
        let recs = label_buildings(vec![building("b", fp)], &[d], 0.5).unwrap();
        assert_eq!(recs[0].label, 0);
    }

    #[test]
    fn random_rectangles_match_overlap_ratio_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..300 {
            let (fx, fy) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let (fw, fh) = (rng.gen_range(1.0..6.0), rng.gen_range(1.0..6.0));
            let (dx, dy) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let (dw, dh) = (rng.gen_range(1.0..6.0), rng.gen_range(1.0..6.0));
            let fp = Polygon::rect(fx, fy, fx + fw, fy + fh);
            let d = Polygon::rect(dx, dy, dx + dw, dy + dh);

            // closed-form interval-overlap oracle
            let ox = (fx + fw).min(dx + dw) - fx.max(dx);
            let oy = (fy + fh).min(dy + dh) - fy.max(dy);
            let inter = if ox > 0.0 && oy > 0.0 { ox * oy } else { 0.0 };
            let want = (inter / (fw * fh).min(dw * dh) >= 0.5) as u8;

            let recs = label_buildings(vec![building("b", fp)], &[d], 0.5).unwrap();
            assert_eq!(recs[0].label, want);
        }
    }
}
