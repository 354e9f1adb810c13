use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::types::BuildingRecord;

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Selective sampling: keep every damaged building, and per city draw
/// `min(ratio * damaged, intact)` intact buildings uniformly without
/// replacement. Selection is a pure function of (seed, city, record ids):
/// records are ordered by (city, id) first, so storage order cannot leak
/// into the draw.
pub fn sample_negatives(
    records: Vec<BuildingRecord>,
    ratio: usize,
    seed: u64,
) -> Vec<BuildingRecord> {
    assert!(ratio >= 1, "sampling ratio must be >= 1");
    let mut records = records;
    records.sort_by(|a, b| (&a.city, &a.id).cmp(&(&b.city, &b.id)));

    let mut out = Vec::new();
    let mut i = 0usize;
    while i < records.len() {
        let city = records[i].city.clone();
        let mut j = i;
        while j < records.len() && records[j].city == city {
            j += 1;
        }
        let city_slice = &records[i..j];
        let damaged: Vec<&BuildingRecord> = city_slice.iter().filter(|r| r.label == 1).collect();
        let intact: Vec<&BuildingRecord> = city_slice.iter().filter(|r| r.label != 1).collect();

        let take = (ratio * damaged.len()).min(intact.len());
        let mut order: Vec<usize> = (0..intact.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&city));
        order.shuffle(&mut rng);

        out.extend(damaged.into_iter().cloned());
        let mut chosen: Vec<usize> = order.into_iter().take(take).collect();
        chosen.sort_unstable();
        out.extend(chosen.into_iter().map(|k| intact[k].clone()));
        i = j;
    }
    out.sort_by(|a, b| (&a.city, &a.id).cmp(&(&b.city, &b.id)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use geocore::Polygon;

    fn city_records(city: &str, damaged: usize, intact: usize) -> Vec<BuildingRecord> {
        (0..damaged + intact)
            .map(|i| BuildingRecord {
                id: format!("{city}_{i:05}"),
                footprint: Polygon::rect(0.0, 0.0, 1.0, 1.0),
                centroid: (0.5, 0.5),
                city: city.into(),
                label: (i < damaged) as u8,
                gem_vector: vec![],
            })
            .collect()
    }

    #[test]
    fn twenty_to_one_ratio_counts() {
        let recs = city_records("a", 10, 500);
        let out = sample_negatives(recs, 20, 7);
        assert_eq!(out.len(), 10 + 200);
        assert_eq!(out.iter().filter(|r| r.label == 1).count(), 10);
    }

    #[test]
    fn intact_pool_caps_the_draw() {
        let recs = city_records("a", 5, 50);
        let out = sample_negatives(recs, 20, 7);
        assert_eq!(out.len(), 5 + 50);
    }

    #[test]
    fn no_damage_keeps_nothing() {
        let recs = city_records("a", 0, 100);
        assert!(sample_negatives(recs, 20, 7).is_empty());
    }

    #[test]
    fn same_seed_identical_different_seed_differs() {
        let recs = city_records("a", 10, 400);
        let ids = |v: &[BuildingRecord]| v.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        let a = sample_negatives(recs.clone(), 20, 42);
        let b = sample_negatives(recs.clone(), 20, 42);
        assert_eq!(ids(&a), ids(&b));
        let c = sample_negatives(recs, 20, 43);
        assert_ne!(ids(&a), ids(&c));
    }

    #[test]
    fn selection_ignores_input_order() {
        let recs = city_records("a", 8, 300);
        let mut shuffled = recs.clone();
        shuffled.reverse();
        let ids = |v: &[BuildingRecord]| v.iter().map(|r| r.id.clone()).collect::<Vec<_>>();
        assert_eq!(
            ids(&sample_negatives(recs, 20, 9)),
            ids(&sample_negatives(shuffled, 20, 9))
        );
    }

    #[test]
    fn positives_never_dropped_across_cities() {
        let mut recs = city_records("a", 3, 10);
        recs.extend(city_records("b", 4, 200));
        let out = sample_negatives(recs, 20, 1);
        assert_eq!(out.iter().filter(|r| r.label == 1).count(), 7);
        // city b negative count: min(80, 200) = 80; city a: min(60, 10) = 10
        assert_eq!(out.len(), 7 + 10 + 80);
    }
}
