//! Bagged regression trees with per-split feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{to_columns, Columns, RegressionTree, TreeParams};
use crate::stats::{self, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    /// Trees train in parallel; tree `t` draws from its own stream seeded by
    /// `derive_seed(seed, t)`, so results do not depend on scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> RandomForest {
        let cols = to_columns(x);
        let n = y.len();
        let trees = (0..params.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, t as u64));
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                RegressionTree::fit(&Columns { cols: &cols }, y, samples, &params.tree, &mut rng)
            })
            .collect();
        RandomForest { trees }
    }

    /// Mean of the trees' predictions.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(row)).collect();
        stats::mean(&preds)
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub(crate) fn max_feature_index(&self) -> Option<usize> {
        self.trees.iter().filter_map(RegressionTree::max_feature_index).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let y = x.iter().map(|r| r[0] * 2.0 + r[2].sin()).collect();
        (x, y)
    }

    #[test]
    fn single_unbagged_tree_equals_cart() {
        let (x, y) = data();
        let tree = TreeParams { max_depth: Some(4), ..Default::default() };
        let rf = RandomForest::fit(&x, &y, &ForestParams { n_estimators: 1, bootstrap: false, tree, seed: 9 });
        let cols = to_columns(&x);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cart = RegressionTree::fit(&Columns { cols: &cols }, &y, (0..y.len()).collect(), &tree, &mut rng);
        for r in &x {
            assert_eq!(rf.predict(r), cart.predict(r));
        }
    }

    #[test]
    fn prediction_is_mean_of_trees() {
        let (x, y) = data();
        let params = ForestParams {
            n_estimators: 7,
            bootstrap: true,
            tree: TreeParams { max_depth: Some(3), max_features: Some(2), ..Default::default() },
            seed: 1,
        };
        let rf = RandomForest::fit(&x, &y, &params);
        for r in x.iter().take(5) {
            let mean = rf.trees().iter().map(|t| t.predict(r)).sum::<f64>() / 7.0;
            assert!((rf.predict(r) - mean).abs() < 1e-12);
        }
        assert_eq!(rf, RandomForest::fit(&x, &y, &params));
        assert_ne!(rf, RandomForest::fit(&x, &y, &ForestParams { seed: 2, ..params }));
    }
}
