//! One-hidden-layer ReLU regressor trained with Adam on mini-batches.
//!
//! Targets are standardized internally and the output layer starts at zero,
//! so the untrained network predicts the training mean.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// L2 penalty on weights (not biases).
    pub l2: f64,
    pub seed: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `hidden x input`, row-major.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    input_dim: usize,
    y_mean: f64,
    y_scale: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, t: i32) {
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
        }
    }
}

impl Mlp {
    /// Build a network from explicit parameters (targets unscaled).
    pub fn from_parts(w1: Vec<f64>, b1: Vec<f64>, w2: Vec<f64>, b2: f64) -> Self {
        let hidden = b1.len();
        assert_eq!(w2.len(), hidden, "output weights must match hidden width");
        assert!(hidden > 0 && w1.len().is_multiple_of(hidden), "w1 must be hidden x input");
        Mlp {
            input_dim: w1.len() / hidden,
            w1,
            b1,
            w2,
            b2,
            y_mean: 0.0,
            y_scale: 1.0,
        }
    }

    fn hidden(&self) -> usize {
        self.b1.len()
    }

    fn forward(&self, row: &[f64], h: &mut [f64]) -> f64 {
        let d = self.input_dim;
        let mut out = self.b2;
        for (k, hk) in h.iter_mut().enumerate() {
            let w = &self.w1[k * d..(k + 1) * d];
            let z = self.b1[k] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            *hk = z.max(0.0);
            out += self.w2[k] * *hk;
        }
        out
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut h = vec![0.0; self.hidden()];
        self.y_mean + self.y_scale * self.forward(row, &mut h)
    }

    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &MlpParams) -> Mlp {
        let n = y.len();
        let d = x.first().map_or(0, Vec::len);
        let hidden = params.hidden_units.max(1);
        let (y_mean, var) = stats::mean_variance(y);
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let he = Normal::new(0.0, (2.0 / d.max(1) as f64).sqrt()).expect("finite std");
        let mut net = Mlp {
            w1: (0..hidden * d).map(|_| he.sample(&mut rng)).collect(),
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            input_dim: d,
            y_mean,
            y_scale,
        };

        let mut opt_w1 = Adam::new(net.w1.len());
        let mut opt_b1 = Adam::new(hidden);
        let mut opt_w2 = Adam::new(hidden);
        let mut opt_b2 = Adam::new(1);
        let mut g_w1 = vec![0.0; net.w1.len()];
        let mut g_b1 = vec![0.0; hidden];
        let mut g_w2 = vec![0.0; hidden];
        let mut h = vec![0.0; hidden];
        let mut order: Vec<usize> = (0..n).collect();
        let batch = params.batch_size.clamp(1, n.max(1));
        let mut t = 0i32;

        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                g_w1.iter_mut().for_each(|g| *g = 0.0);
                g_b1.iter_mut().for_each(|g| *g = 0.0);
                g_w2.iter_mut().for_each(|g| *g = 0.0);
                let mut g_b2 = 0.0;
                let m = chunk.len() as f64;
                for &i in chunk {
                    let row = &x[i];
                    let err = (net.forward(row, &mut h) - ys[i]) / m;
                    g_b2 += err;
                    for k in 0..hidden {
                        g_w2[k] += err * h[k];
                        if h[k] > 0.0 {
                            let delta = err * net.w2[k];
                            g_b1[k] += delta;
                            for (g, xv) in g_w1[k * d..(k + 1) * d].iter_mut().zip(row) {
                                *g += delta * xv;
                            }
                        }
                    }
                }
                if params.l2 > 0.0 {
                    for (g, w) in g_w1.iter_mut().zip(&net.w1) {
                        *g += params.l2 * w / n as f64;
                    }
                    for (g, w) in g_w2.iter_mut().zip(&net.w2) {
                        *g += params.l2 * w / n as f64;
                    }
                }
                t = t.saturating_add(1);
                opt_w1.step(&mut net.w1, &g_w1, params.learning_rate, t);
                opt_b1.step(&mut net.b1, &g_b1, params.learning_rate, t);
                opt_w2.step(&mut net.w2, &g_w2, params.learning_rate, t);
                let mut b2 = [net.b2];
                opt_b2.step(&mut b2, &[g_b2], params.learning_rate, t);
                net.b2 = b2[0];
            }
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn params() -> MlpParams {
        MlpParams {
            hidden_units: 16,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 8,
            l2: 1e-4,
            seed: 5,
        }
    }

    #[test]
    fn dead_network_outputs_bias() {
        let net = Mlp::from_parts(vec![0.0; 6], vec![0.0; 2], vec![0.3, -1.2], 0.25);
        for row in [[1.0, 2.0, 3.0], [-5.0, 0.0, 9.0]] {
            assert_eq!(net.predict(&row), 0.25);
        }
    }

    #[test]
    fn constant_target_exact() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 10.0, 1.0 - i as f64 / 20.0]).collect();
        let net = Mlp::fit(&x, &[0.37; 20], &params());
        assert_eq!(net.predict(&[3.0, -2.0]), 0.37);
    }

    #[test]
    fn learns_a_simple_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].abs() + 0.5 * r[1]).collect();
        let net = Mlp::fit(&x, &y, &params());
        let pred: Vec<f64> = x.iter().map(|r| net.predict(r)).collect();
        let (_, var) = stats::mean_variance(&y);
        assert!(stats::mse(&pred, &y) < 0.1 * var, "mse {}", stats::mse(&pred, &y));
        assert_eq!(net, Mlp::fit(&x, &y, &params()));
    }
}
