use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::EvalError;

/// Stratified k-fold split over binary labels.
///
/// Returns `k` (train, validation) index pairs. Folds partition the input;
/// per-fold positive counts differ by at most one, likewise negatives. The
/// class shuffles are seeded, so identical seeds give identical folds.
pub fn stratified_kfold(
    labels: &[u8],
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>, EvalError> {
    assert!(k >= 2, "k must be at least 2");
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    if pos.len() < k {
        return Err(EvalError::TooFewPerClass { class: "positive", k, have: pos.len() });
    }
    if neg.len() < k {
        return Err(EvalError::TooFewPerClass { class: "negative", k, have: neg.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, &idx) in pos.iter().enumerate() {
        folds[j % k].push(idx);
    }
    for (j, &idx) in neg.iter().enumerate() {
        folds[j % k].push(idx);
    }

    let mut out = Vec::with_capacity(k);
    for f in 0..k {
        let mut val = folds[f].clone();
        val.sort_unstable();
        let mut train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        train.sort_unstable();
        out.push((train, val));
    }
    Ok(out)
}

/// One leave-one-city-out split: every record of `city` is the test set.
#[derive(Debug, Clone)]
pub struct CitySplit {
    pub city: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Leave-one-city-out splits, one per distinct city in sorted city order.
pub fn leave_one_city_out(cities: &[String]) -> Result<Vec<CitySplit>, EvalError> {
    let mut names: Vec<&String> = cities.iter().collect();
    names.sort();
    names.dedup();
    if names.len() < 2 {
        return Err(EvalError::SingleCity(names.len()));
    }
    Ok(names
        .into_iter()
        .map(|name| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..cities.len()).partition(|&i| &cities[i] == name);
            CitySplit { city: name.clone(), train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_divisible_folds() {
        let mut labels = vec![1u8; 10];
        labels.extend(vec![0u8; 100]);
        let folds = stratified_kfold(&labels, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        for (train, val) in &folds {
            let pos = val.iter().filter(|&&i| labels[i] == 1).count();
            let neg = val.iter().filter(|&&i| labels[i] != 1).count();
            assert_eq!(pos, 2);
            assert_eq!(neg, 20);
            assert_eq!(train.len() + val.len(), labels.len());
        }
    }

    #[test]
    fn folds_partition_the_index_set() {
        let labels: Vec<u8> = (0..57).map(|i| (i % 7 == 0) as u8).collect();
        let folds = stratified_kfold(&labels, 4, 11).unwrap();
        let mut seen = vec![false; labels.len()];
        for (_, val) in &folds {
            for &i in val {
                assert!(!seen[i], "fold overlap at {i}");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn same_seed_same_folds() {
        let labels: Vec<u8> = (0..40).map(|i| (i % 5 == 0) as u8).collect();
        assert_eq!(stratified_kfold(&labels, 5, 9).unwrap(), stratified_kfold(&labels, 5, 9).unwrap());
    }

    #[test]
    fn too_few_positives_rejected() {
        let labels = vec![1u8, 0, 0, 0, 0, 0, 0, 0];
        assert!(matches!(
            stratified_kfold(&labels, 2, 0),
            Err(EvalError::TooFewPerClass { class: "positive", .. })
        ));
    }

    #[test]
    fn loco_city_purity_and_coverage() {
        let cities: Vec<String> = ["a", "b", "a", "c", "b", "a"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let splits = leave_one_city_out(&cities).unwrap();
        assert_eq!(splits.len(), 3);
        let mut covered = vec![false; cities.len()];
        for s in &splits {
            for &i in &s.test {
                assert_eq!(cities[i], s.city);
                covered[i] = true;
            }
            for &i in &s.train {
                assert_ne!(cities[i], s.city);
            }
        }
        assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn single_city_rejected() {
        let cities = vec!["only".to_string(); 4];
        assert!(matches!(leave_one_city_out(&cities), Err(EvalError::SingleCity(1))));
    }
}
