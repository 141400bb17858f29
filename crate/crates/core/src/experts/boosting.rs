//! Stage-wise least-squares gradient boosting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{to_columns, Columns, Presorted, RegressionTree, TreeParams};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostingParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl GradientBoosting {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &BoostingParams) -> GradientBoosting {
        Self::fit_traced(x, y, params).0
    }

    /// Also returns the training MSE after the initial constant and after
    /// each stage (`n_estimators + 1` values).
    pub fn fit_traced(x: &[Vec<f64>], y: &[f64], params: &BoostingParams) -> (GradientBoosting, Vec<f64>) {
        let cols = to_columns(x);
        let view = Columns { cols: &cols };
        let init = stats::mean(y);
        let mut current = vec![init; y.len()];
        let mut trace = vec![stats::mse(&current, y)];
        let mut trees = Vec::with_capacity(params.n_estimators);
        // split search never samples features here, so the rng is inert
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all: Vec<usize> = (0..y.len()).collect();
        let sorted = Presorted::new(&view, &all);
        let mut residual = vec![0.0; y.len()];
        for _ in 0..params.n_estimators {
            for ((r, t), f) in residual.iter_mut().zip(y).zip(&current) {
                *r = t - f;
            }
            let tree = RegressionTree::fit_presorted(&view, &residual, &sorted, &params.tree, &mut rng);
            for (f, row) in current.iter_mut().zip(x) {
                *f += params.learning_rate * tree.predict(row);
            }
            trace.push(stats::mse(&current, y));
            let stalled = tree.n_leaves() == 1;
            trees.push(tree);
            if stalled && residual.iter().all(|r| *r == 0.0) {
                break;
            }
        }
        (
            GradientBoosting {
                init,
                learning_rate: params.learning_rate,
                trees,
            },
            trace,
        )
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.init, |acc, t| acc + self.learning_rate * t.predict(row))
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(crate) fn max_feature_index(&self) -> Option<usize> {
        self.trees.iter().filter_map(RegressionTree::max_feature_index).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stump_is_a_step_function() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.0, 0.1, 0.0, 1.0, 0.9, 1.0];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
        let params = BoostingParams {
            n_estimators: 1,
            learning_rate: 1.0,
            tree: TreeParams {
                max_depth: Some(1),
                ..Default::default()
            },
        };
        let gb = GradientBoosting::fit(&rows, &y, &params);

        // brute force: every midpoint threshold, keep the lowest SSE
        let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
        for k in 0..xs.len() - 1 {
            let thr = (xs[k] + xs[k + 1]) / 2.0;
            let (l, r): (Vec<f64>, Vec<f64>) = xs.iter().zip(&y).fold((vec![], vec![]), |(mut l, mut r), (x, t)| {
                if *x <= thr { l.push(*t) } else { r.push(*t) }
                (l, r)
            });
            let ml = l.iter().sum::<f64>() / l.len() as f64;
            let mr = r.iter().sum::<f64>() / r.len() as f64;
            let sse: f64 = l.iter().map(|v| (v - ml).powi(2)).sum::<f64>() + r.iter().map(|v| (v - mr).powi(2)).sum::<f64>();
            if sse < best.0 {
                best = (sse, thr, ml, mr);
            }
        }
        let (_, thr, ml, mr) = best;
        assert_eq!(thr, 2.5);
        for &x in &[-1.0, 0.0, 2.5, 2.6, 4.0, 9.0] {
            let want = if x <= thr { ml } else { mr };
            assert!((gb.predict(&[x]) - want).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn constant_target() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let params = BoostingParams {
            n_estimators: 50,
            learning_rate: 0.1,
            tree: TreeParams { max_depth: Some(3), ..Default::default() },
        };
        let gb = GradientBoosting::fit(&rows, &[0.42; 10], &params);
        assert_eq!(gb.predict(&[123.0]), 0.42);
    }
}
