//! Softmax gating over pre-trained experts.
//!
//! The gate holds one weight `w[i]` and one bias `b[i]` per expert and does
//! not look at the input. With `prob = softmax(w)` and residuals
//! `r[i] = y - yhat[i] + b[i]`, a sample's error is
//! `E = sum_i 0.5 * prob[i] * r[i]^2`. Training runs plain per-sample SGD.
//!
//! [`GradientRule::Published`] uses `dw[i] = 0.5 * prob[i] * (1 - prob[i]) * r[i]^2`,
//! which drops the cross-expert softmax terms. [`GradientRule::Exact`] uses
//! the full derivative `prob[i] * (0.5 * r[i]^2 - E)`. Both use
//! `db[i] = prob[i] * r[i]`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabelSet, Target, TaskKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GatingNetwork {
    w: Vec<f64>,
    b: Vec<f64>,
    eta: f64,
}

impl GatingNetwork {
    /// Zero weights and biases for `experts` experts.
    pub fn new(experts: usize, eta: f64) -> Result<Self> {
        Self::from_parts(vec![0.0; experts], vec![0.0; experts], eta)
    }

    pub fn from_parts(w: Vec<f64>, b: Vec<f64>, eta: f64) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("gating network needs at least one expert".into()));
        }
        if w.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: w.len(),
                got: b.len(),
            });
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidInput(format!("learning rate must be positive and finite, got {eta}")));
        }
        if w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gate parameters must be finite".into()));
        }
        Ok(GatingNetwork { w, b, eta })
    }

    pub fn expert_count(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn prob(&self) -> Vec<f64> {
        softmax(&self.w)
    }
}

/// Max-shifted softmax.
pub fn softmax(w: &[f64]) -> Vec<f64> {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = w.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn residuals(y: f64, preds: &[f64], net: &GatingNetwork) -> Vec<f64> {
    assert_eq!(preds.len(), net.expert_count(), "one prediction per expert");
    preds.iter().zip(&net.b).map(|(p, b)| y - p + b).collect()
}

pub fn gating_error(y: f64, preds: &[f64], net: &GatingNetwork) -> f64 {
    let r = residuals(y, preds, net);
    net.prob().iter().zip(&r).map(|(p, r)| 0.5 * p * r * r).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientRule {
    #[default]
    Published,
    Exact,
}

/// Gradients with respect to `w` and `b` under the published update rule.
pub fn gating_gradients(y: f64, preds: &[f64], net: &GatingNetwork) -> (Vec<f64>, Vec<f64>) {
    gradients(GradientRule::Published, y, preds, net)
}

pub fn gradients(rule: GradientRule, y: f64, preds: &[f64], net: &GatingNetwork) -> (Vec<f64>, Vec<f64>) {
    let r = residuals(y, preds, net);
    let prob = net.prob();
    let db: Vec<f64> = prob.iter().zip(&r).map(|(p, r)| p * r).collect();
    let dw: Vec<f64> = match rule {
        GradientRule::Published => prob.iter().zip(&r).map(|(p, r)| 0.5 * p * (1.0 - p) * r * r).collect(),
        GradientRule::Exact => {
            let e: f64 = prob.iter().zip(&r).map(|(p, r)| 0.5 * p * r * r).sum();
            prob.iter().zip(&r).map(|(p, r)| p * (0.5 * r * r - e)).collect()
        }
    };
    (dw, db)
}

/// One SGD update with the published gradients.
pub fn sgd_step(net: &GatingNetwork, y: f64, preds: &[f64]) -> GatingNetwork {
    step_with(net, y, preds, GradientRule::Published, false)
}

pub fn step_with(net: &GatingNetwork, y: f64, preds: &[f64], rule: GradientRule, freeze_bias: bool) -> GatingNetwork {
    let (dw, db) = gradients(rule, y, preds, net);
    let mut next = net.clone();
    for (w, g) in next.w.iter_mut().zip(&dw) {
        *w -= net.eta * g;
    }
    if !freeze_bias {
        for (b, g) in next.b.iter_mut().zip(&db) {
            *b -= net.eta * g;
        }
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateTraining {
    pub eta: f64,
    pub epochs: usize,
    pub seed: u64,
    pub rule: GradientRule,
    pub freeze_bias: bool,
    /// Stop once the per-epoch mean error improves by less than this.
    pub tolerance: f64,
}

impl Default for GateTraining {
    fn default() -> Self {
        GateTraining {
            eta: 0.01,
            epochs: 100,
            seed: 0,
            rule: GradientRule::Published,
            freeze_bias: false,
            tolerance: 1e-9,
        }
    }
}

/// A trained gate plus the mean error over all samples after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGate {
    pub net: GatingNetwork,
    pub trace: Vec<f64>,
}

fn mean_error(p: &[Vec<f64>], y: &[f64], net: &GatingNetwork) -> f64 {
    p.iter().zip(y).map(|(row, &t)| gating_error(t, row, net)).sum::<f64>() / y.len() as f64
}

/// Train a gate on an `N x I` prediction matrix `p` against targets `y`.
pub fn train_gating(p: &[Vec<f64>], y: &[f64], opts: &GateTraining) -> Result<TrainedGate> {
    if p.is_empty() {
        return Err(Error::InvalidInput("gate training needs at least one sample".into()));
    }
    if p.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: y.len(),
        });
    }
    if opts.epochs == 0 {
        return Err(Error::InvalidInput("gate training needs at least one epoch".into()));
    }
    let experts = p[0].len();
    for (i, row) in p.iter().enumerate() {
        if row.len() != experts {
            return Err(Error::DimensionMismatch {
                expected: experts,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) || !y[i].is_finite() {
            return Err(Error::InvalidInput(format!("non-finite expert prediction or target in row {i}")));
        }
    }

    let mut net = GatingNetwork::new(experts, opts.eta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    let mut trace = Vec::with_capacity(opts.epochs);
    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            net = step_with(&net, y[i], &p[i], opts.rule, opts.freeze_bias);
        }
        if net.w.iter().chain(&net.b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gate parameters diverged; lower the learning rate".into()));
        }
        let e = mean_error(p, y, &net);
        let stalled = trace.last().is_some_and(|&prev: &f64| prev - e < opts.tolerance);
        trace.push(e);
        if stalled {
            break;
        }
    }
    Ok(TrainedGate { net, trace })
}

/// Combined score `sum_i prob[i] * (yhat[i] - b[i])`.
pub fn gate_score(net: &GatingNetwork, preds: &[f64]) -> f64 {
    assert_eq!(preds.len(), net.expert_count(), "one prediction per expert");
    net.prob().iter().zip(preds).zip(&net.b).map(|((p, y), b)| p * (y - b)).sum()
}

/// Map a raw single-output score onto the task's target space.
pub fn map_score(task: TaskKind, raw: f64) -> Target {
    match task.ordinal_classes() {
        Some(classes) => Target::Ordinal(raw.round().clamp(0.0, f64::from(classes - 1)) as u8),
        None => Target::Scalar(raw.clamp(0.0, 1.0)),
    }
}

/// Final prediction for one sample. E-c takes one network and one prediction
/// row per label; every other task takes exactly one of each.
pub fn gate_predict(nets: &[GatingNetwork], preds: &[Vec<f64>], task: TaskKind) -> Result<Target> {
    let expected = if task == TaskKind::Ec { LabelSet::LEN } else { 1 };
    if nets.len() != expected || preds.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: nets.len().min(preds.len()),
        });
    }
    for (net, row) in nets.iter().zip(preds) {
        if row.len() != net.expert_count() {
            return Err(Error::DimensionMismatch {
                expected: net.expert_count(),
                got: row.len(),
            });
        }
    }
    if task == TaskKind::Ec {
        let mut labels = LabelSet::empty();
        for (k, (net, row)) in nets.iter().zip(preds).enumerate() {
            labels.set(k, gate_score(net, row) >= 0.5);
        }
        return Ok(Target::LabelSet(labels));
    }
    Ok(map_score(task, gate_score(&nets[0], &preds[0])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Emotion;
    use proptest::prelude::*;

    fn net(w: &[f64], b: &[f64], eta: f64) -> GatingNetwork {
        GatingNetwork::from_parts(w.to_vec(), b.to_vec(), eta).unwrap()
    }

    #[test]
    fn softmax_values() {
        assert_eq!(softmax(&[0.0, 0.0, 0.0]), vec![1.0 / 3.0; 3]);
        let p = softmax(&[2f64.ln(), 0.0]);
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        // e^k / (e + e^2 + e^3), evaluated to 20 digits
        let p = softmax(&[1.0, 2.0, 3.0]);
        for (got, want) in p.iter().zip([0.090030573170380462, 0.24472847105479764, 0.66524095577482190]) {
            assert!((got - want).abs() < 1e-15);
        }
        let p = softmax(&[1000.0, 1000.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn error_examples() {
        assert_eq!(gating_error(1.0, &[1.0], &net(&[0.0], &[0.0], 0.1)), 0.0);
        assert_eq!(gating_error(1.0, &[0.0, 2.0], &net(&[0.0, 0.0], &[0.0, 0.0], 0.1)), 0.5);
        assert_eq!(gating_error(1.0, &[0.0, 2.0], &net(&[0.3, -1.0], &[-1.0, 1.0], 0.1)), 0.0);
    }

    #[test]
    fn gradient_and_step_example() {
        let n = net(&[0.0, 0.0], &[0.0, 0.0], 0.1);
        let (dw, db) = gating_gradients(1.0, &[0.0, 2.0], &n);
        assert_eq!(dw, vec![0.125, 0.125]);
        assert_eq!(db, vec![0.5, -0.5]);
        let next = sgd_step(&n, 1.0, &[0.0, 2.0]);
        assert_eq!(next.w(), &[-0.0125, -0.0125]);
        assert_eq!(next.b(), &[-0.05, 0.05]);
        assert_eq!(next.prob(), n.prob());
    }

    #[test]
    fn zero_residuals_leave_net_unchanged() {
        let n = net(&[0.2, -0.4], &[0.25, -0.25], 0.5);
        let (dw, db) = gating_gradients(0.5, &[0.75, 0.25], &n);
        assert_eq!((dw, db), (vec![0.0, 0.0], vec![0.0, 0.0]));
        assert_eq!(sgd_step(&n, 0.5, &[0.75, 0.25]), n);
    }

    #[test]
    fn predict_examples() {
        let n = net(&[0.0, 0.0], &[0.0, 0.2], 0.1);
        assert!((gate_score(&n, &[0.2, 0.6]) - 0.3).abs() < 1e-15);
        let agree = net(&[0.7, -2.0, 0.1], &[0.0; 3], 0.1);
        assert!((gate_score(&agree, &[0.4; 3]) - 0.4).abs() < 1e-15);
        let one = net(&[0.0], &[0.0], 0.1);
        let reg = TaskKind::EiReg(Emotion::Anger);
        assert_eq!(gate_predict(&[one.clone()], &[vec![1.3]], reg).unwrap(), Target::Scalar(1.0));
        assert_eq!(gate_predict(&[one.clone()], &[vec![-0.2]], reg).unwrap(), Target::Scalar(0.0));
        let oc = TaskKind::EiOc(Emotion::Fear);
        assert_eq!(gate_predict(&[one.clone()], &[vec![2.4]], oc).unwrap(), Target::Ordinal(2));
        assert_eq!(gate_predict(&[one.clone()], &[vec![7.0]], oc).unwrap(), Target::Ordinal(3));
        assert_eq!(gate_predict(&[one.clone()], &[vec![5.6]], TaskKind::VOc).unwrap(), Target::Ordinal(6));
        let nets = vec![one; LabelSet::LEN];
        let mut rows = vec![vec![0.1]; LabelSet::LEN];
        rows[2] = vec![0.5];
        rows[9] = vec![0.9];
        let Target::LabelSet(l) = gate_predict(&nets, &rows, TaskKind::Ec).unwrap() else { panic!() };
        assert_eq!((l.count(), l.get(2), l.get(9)), (2, true, true));
        assert!(gate_predict(&nets, &rows, reg).is_err());
    }

    #[test]
    fn single_expert_bias_settles() {
        let p: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 30.0 + 0.2]).collect();
        let y: Vec<f64> = (0..30).map(|i| i as f64 / 30.0).collect();
        let g = train_gating(&p, &y, &GateTraining { eta: 0.1, epochs: 500, tolerance: 0.0, ..Default::default() }).unwrap();
        assert_eq!(g.net.prob(), vec![1.0]);
        assert!((g.net.b()[0] - 0.2).abs() < 1e-9);
        let (_, db) = gating_gradients(y[3], &p[3], &g.net);
        assert!(db[0].abs() < 1e-9);
    }

    #[test]
    fn perfect_single_sample() {
        let g = train_gating(&[vec![0.4]], &[0.4], &GateTraining { epochs: 1, ..Default::default() }).unwrap();
        assert_eq!(g.trace, vec![0.0]);
    }

    #[test]
    fn training_errors() {
        let o = GateTraining::default();
        assert!(train_gating(&[], &[], &o).is_err());
        assert!(train_gating(&[vec![0.1]], &[0.1], &GateTraining { epochs: 0, ..o }).is_err());
        assert!(train_gating(&[vec![f64::NAN]], &[0.1], &o).is_err());
        assert!(train_gating(&[vec![0.1]], &[f64::INFINITY], &o).is_err());
        assert!(train_gating(&[vec![0.1], vec![0.1, 0.2]], &[0.1, 0.2], &o).is_err());
        assert!(GatingNetwork::new(2, 0.0).is_err());
        assert!(GatingNetwork::new(0, 0.1).is_err());
    }

    #[test]
    fn exact_rule_is_true_derivative() {
        let n = net(&[0.3, -0.2, 1.1], &[0.05, -0.1, 0.2], 0.1);
        let (y, preds) = (0.6, [0.2, 0.9, 0.4]);
        let (dw, _) = gradients(GradientRule::Exact, y, &preds, &n);
        for i in 0..3 {
            let h = 1e-6;
            let mut up = n.w.clone();
            let mut dn = n.w.clone();
            up[i] += h;
            dn[i] -= h;
            let fd = (gating_error(y, &preds, &net(&up, &n.b, 0.1)) - gating_error(y, &preds, &net(&dn, &n.b, 0.1))) / (2.0 * h);
            assert!((fd - dw[i]).abs() < 1e-9, "{i}: {fd} vs {}", dw[i]);
        }
    }

    fn instance() -> impl Strategy<Value = (f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..=8).prop_flat_map(|n| {
            (
                -2.0..2.0f64,
                prop::collection::vec(-2.0..2.0f64, n),
                prop::collection::vec(-3.0..3.0f64, n),
                prop::collection::vec(-1.0..1.0f64, n),
            )
        })
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(w in prop::collection::vec(-50.0..50.0f64, 1..10)) {
            let p = softmax(&w);
            prop_assert!(p.iter().all(|&v| v > 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn error_shift_invariant((y, preds, w, b) in instance(), c in -5.0..5.0f64) {
            let shifted: Vec<f64> = w.iter().map(|v| v + c).collect();
            let e0 = gating_error(y, &preds, &net(&w, &b, 0.1));
            let e1 = gating_error(y, &preds, &net(&shifted, &b, 0.1));
            prop_assert!((e0 - e1).abs() <= 1e-12);
        }

        #[test]
        fn published_dw_non_negative((y, preds, w, b) in instance()) {
            let n = net(&w, &b, 0.1);
            let (dw, _) = gating_gradients(y, &preds, &n);
            prop_assert!(dw.iter().all(|&g| g >= 0.0));
            let next = sgd_step(&n, y, &preds);
            prop_assert!(next.w().iter().zip(n.w()).all(|(a, b)| a <= b));
        }

        #[test]
        fn training_is_deterministic(rows in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 3), 1..20), seed in any::<u64>()) {
            let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let o = GateTraining { seed, epochs: 5, ..Default::default() };
            let a = train_gating(&rows, &y, &o).unwrap();
            let b = train_gating(&rows, &y, &o).unwrap();
            prop_assert_eq!(a.trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(a.net, b.net);
        }
    }
}
