//! Stratified k-fold assignment.
//!
//! Strata: ordinal targets by class, scalar targets by decile of `[0, 1]`,
//! label sets by label count. Each stratum is shuffled and dealt round-robin
//! onto the folds, continuing from where the previous stratum stopped, so
//! both per-stratum and total fold sizes differ by at most one.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Target;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Fold index of every sample, in sample order.
    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    /// Sample indices held out in `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    /// Sample indices used for training when `fold` is held out, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

/// Stratum key of one target.
pub fn stratum(target: &Target) -> i64 {
    match *target {
        Target::Ordinal(c) => i64::from(c),
        Target::Scalar(v) => ((v * 10.0).floor() as i64).clamp(0, 9),
        Target::LabelSet(l) => l.count() as i64,
    }
}

pub fn stratified_kfold(targets: &[Target], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > targets.len() {
        return Err(Error::InvalidInput(format!("k = {k} exceeds the {} available samples", targets.len())));
    }
    let mut strata: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, t) in targets.iter().enumerate() {
        strata.entry(stratum(t)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; targets.len()];
    let mut next = 0;
    for members in strata.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold_sizes(f: &FoldAssignment) -> Vec<usize> {
        (0..f.k()).map(|j| f.test_indices(j).len()).collect()
    }

    #[test]
    fn balanced_two_classes() {
        let t: Vec<Target> = (0..100).map(|i| Target::Ordinal((i % 2) as u8)).collect();
        let f = stratified_kfold(&t, 5, 1).unwrap();
        for j in 0..5 {
            let idx = f.test_indices(j);
            assert_eq!(idx.len(), 20);
            assert_eq!(idx.iter().filter(|&&i| i % 2 == 0).count(), 10);
        }
    }

    #[test]
    fn remainder_spread() {
        let t = vec![Target::Ordinal(2); 101];
        let mut sizes = fold_sizes(&stratified_kfold(&t, 5, 3).unwrap());
        sizes.sort_unstable();
        assert_eq!(sizes, vec![20, 20, 20, 20, 21]);
    }

    #[test]
    fn seeded() {
        let t: Vec<Target> = (0..60).map(|i| Target::Scalar(i as f64 / 60.0)).collect();
        assert_eq!(stratified_kfold(&t, 4, 7).unwrap(), stratified_kfold(&t, 4, 7).unwrap());
        assert_ne!(stratified_kfold(&t, 4, 7).unwrap(), stratified_kfold(&t, 4, 8).unwrap());
    }

    #[test]
    fn train_and_test_partition() {
        let t: Vec<Target> = (0..23).map(|i| Target::Ordinal((i % 3) as u8)).collect();
        let f = stratified_kfold(&t, 4, 0).unwrap();
        for j in 0..4 {
            let mut all = f.train_indices(j);
            all.extend(f.test_indices(j));
            all.sort_unstable();
            assert_eq!(all, (0..23).collect::<Vec<_>>());
        }
    }

    #[test]
    fn strata_keys() {
        assert_eq!(stratum(&Target::Scalar(1.0)), 9);
        assert_eq!(stratum(&Target::Scalar(0.0)), 0);
        assert_eq!(stratum(&Target::Scalar(0.35)), 3);
        assert_eq!(stratum(&Target::Ordinal(6)), 6);
    }

    #[test]
    fn bad_k() {
        let t = vec![Target::Ordinal(0); 3];
        assert!(stratified_kfold(&t, 4, 0).is_err());
        assert!(stratified_kfold(&t, 1, 0).is_err());
    }
}
