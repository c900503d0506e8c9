use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PaldError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits indices into `k` folds with every class spread as evenly as
/// possible.
///
/// Each class (in sorted order) is shuffled with a seeded ChaCha8 stream and
/// dealt round-robin across folds, continuing from where the previous class
/// stopped so that fold sizes also differ by at most one.
pub fn stratified_kfold<T: Ord>(labels: &[T], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(PaldError::TooFewSamples { n, folds: k });
    }
    let mut classes: BTreeMap<&T, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        classes.entry(label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0;
    for members in classes.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            tests[next].push(i);
            next = (next + 1) % k;
        }
    }
    let mut fold_of = vec![0; n];
    for (f, test) in tests.iter_mut().enumerate() {
        test.sort_unstable();
        for &i in test.iter() {
            fold_of[i] = f;
        }
    }
    Ok(tests
        .into_iter()
        .enumerate()
        .map(|(f, test)| Fold {
            train: (0..n).filter(|&i| fold_of[i] != f).collect(),
            test,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_pairs() {
        let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let folds = stratified_kfold(&labels, 10, 7).unwrap();
        for f in &folds {
            assert_eq!(f.test.len(), 2);
            assert_ne!(labels[f.test[0]], labels[f.test[1]]);
            assert_eq!(f.train.len(), 18);
        }
        assert_eq!(folds, stratified_kfold(&labels, 10, 7).unwrap());
    }

    #[test]
    fn uneven_classes() {
        let labels: Vec<u8> = (0..195).map(|i| [0, 0, 1, 2, 3, 1, 0][i % 7]).collect();
        let folds = stratified_kfold(&labels, 10, 1).unwrap();
        let mut seen = vec![0; 195];
        for f in &folds {
            assert!(matches!(f.test.len(), 19 | 20));
            f.test.iter().for_each(|&i| seen[i] += 1);
        }
        assert!(seen.iter().all(|&c| c == 1));
        for class in 0..4u8 {
            let counts: Vec<usize> = folds
                .iter()
                .map(|f| f.test.iter().filter(|&&i| labels[i] == class).count())
                .collect();
            let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
            assert!(hi - lo <= 1, "class {class}: {counts:?}");
        }
    }

    #[test]
    fn too_many_folds() {
        assert!(matches!(
            stratified_kfold(&[1, 2, 3], 4, 0).unwrap_err(),
            PaldError::TooFewSamples { n: 3, folds: 4 }
        ));
        assert!(stratified_kfold(&[1, 2, 3], 1, 0).is_err());
    }
}
