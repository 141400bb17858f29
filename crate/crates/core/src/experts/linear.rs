//! Ridge and lasso regression by cyclic coordinate descent.
//!
//! Minimizes `1/(2n) |y - b0 - X w|^2 + l1 |w|_1 + l2/2 |w|^2` with an
//! unpenalized intercept. Features and target are centred first.

use serde::{Deserialize, Serialize};

use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    pub l1: f64,
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the largest coefficient change in a sweep is below this.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl LinearModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &LinearParams) -> LinearModel {
        let n = y.len();
        let d = x.first().map_or(0, Vec::len);
        let nf = n as f64;
        let x_mean: Vec<f64> = (0..d)
            .map(|j| stats::mean(&x.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect();
        let y_mean = stats::mean(y);
        let cols: Vec<Vec<f64>> = (0..d).map(|j| x.iter().map(|r| r[j] - x_mean[j]).collect()).collect();
        let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();

        let mut w = vec![0.0; d];
        let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        for _ in 0..params.max_iter {
            let mut max_delta = 0.0f64;
            for j in 0..d {
                if sq[j] == 0.0 {
                    continue;
                }
                let col = &cols[j];
                let rho = col.iter().zip(&resid).map(|(c, r)| c * r).sum::<f64>() / nf + sq[j] * w[j];
                let new = soft_threshold(rho, params.l1) / (sq[j] + params.l2);
                let delta = new - w[j];
                if delta != 0.0 {
                    for (r, c) in resid.iter_mut().zip(col) {
                        *r -= delta * c;
                    }
                    w[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if max_delta <= params.tol {
                break;
            }
        }
        let intercept = y_mean - w.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
        LinearModel {
            intercept,
            coefficients: w,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }
}
