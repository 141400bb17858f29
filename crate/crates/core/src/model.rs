//! The full experts model: pre-trained experts plus a softmax gate per
//! output head. Single-output tasks have one head; E-c has one per label.
//!
//! By default the gate is trained on out-of-fold expert predictions: for
//! each of `k` stratified folds the experts are fit on the other folds and
//! predict the held-out one. The experts kept for inference are then refit
//! on all training data. `in_sample` trains the gate on the final experts'
//! own training-set predictions instead.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Target, TaskKind, EC_LABELS};
use crate::error::{Error, Result};
use crate::eval::folds::{stratified_kfold, DEFAULT_K};
use crate::experts::{default_roster, ExpertConfig, TrainedExpert};
use crate::gating::{gate_predict, train_gating, GateTraining, GatingNetwork, GradientRule, TrainedGate};
use crate::stats::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatingConfig {
    pub eta: f64,
    pub epochs: usize,
    pub tolerance: f64,
    pub exact_gradient: bool,
    pub in_sample: bool,
    pub freeze_bias: bool,
}

impl Default for GatingConfig {
    fn default() -> Self {
        let d = GateTraining::default();
        GatingConfig {
            eta: d.eta,
            epochs: d.epochs,
            tolerance: d.tolerance,
            exact_gradient: false,
            in_sample: false,
            freeze_bias: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub k: usize,
    pub seed: u64,
    pub gating: GatingConfig,
    /// Empty means the task's default roster.
    pub roster: Vec<ExpertConfig>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            k: DEFAULT_K,
            seed: 0,
            gating: GatingConfig::default(),
            roster: Vec::new(),
        }
    }
}

impl ModelConfig {
    /// Fill in the default roster and per-expert seeds.
    pub fn resolved(&self, task: TaskKind) -> ModelConfig {
        let mut c = self.clone();
        if c.roster.is_empty() {
            c.roster = default_roster(task);
        }
        c.roster = c
            .roster
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.with_default_seed(derive_seed(self.seed, i as u64)))
            .collect();
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("model.k must be at least 2, got {}", self.k)));
        }
        if !(self.gating.eta.is_finite() && self.gating.eta > 0.0) {
            return Err(Error::Config(format!("model.gating.eta must be positive, got {}", self.gating.eta)));
        }
        if self.gating.epochs == 0 {
            return Err(Error::Config("model.gating.epochs must be at least 1".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config("model.seed must fit in 63 bits".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.roster {
            if !e.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!("model.roster: expert name `{}` may only use [A-Za-z0-9_-]", e.name)));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Config(format!("model.roster: duplicate expert name `{}`", e.name)));
            }
            e.validate()?;
        }
        Ok(())
    }

    fn training(&self, head: usize) -> GateTraining {
        GateTraining {
            eta: self.gating.eta,
            epochs: self.gating.epochs,
            seed: derive_seed(self.seed, 1_000_000 + head as u64),
            rule: if self.gating.exact_gradient {
                GradientRule::Exact
            } else {
                GradientRule::Published
            },
            freeze_bias: self.gating.freeze_bias,
            tolerance: self.gating.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub label: String,
    pub experts: Vec<TrainedExpert>,
    pub gate: TrainedGate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertsModel {
    task: TaskKind,
    config: ModelConfig,
    heads: Vec<Head>,
}

/// Per head: label, numeric targets, and the targets used for stratification.
pub(crate) type HeadTargets = Vec<(String, Vec<f64>, Vec<Target>)>;

pub(crate) fn head_targets(task: TaskKind, targets: &[Target]) -> Result<HeadTargets> {
    for (i, t) in targets.iter().enumerate() {
        crate::corpus::check_target(task, t).map_err(|m| Error::InvalidInput(format!("{task} target {i}: {m}")))?;
    }
    if task == TaskKind::Ec {
        let sets = targets
            .iter()
            .map(|t| match t {
                Target::LabelSet(l) => Ok(*l),
                _ => Err(Error::InvalidInput("E-c training needs label-set targets".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(EC_LABELS
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let y = sets.iter().map(|l| if l.get(k) { 1.0 } else { 0.0 }).collect();
                let strata = sets.iter().map(|l| Target::Ordinal(u8::from(l.get(k)))).collect();
                (name.to_string(), y, strata)
            })
            .collect());
    }
    let y = targets
        .iter()
        .map(|t| t.as_numeric().ok_or_else(|| Error::InvalidInput(format!("{task} training needs single-valued targets"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![("main".to_string(), y, targets.to_vec())])
}

fn fit_all(roster: &[ExpertConfig], x: &[Vec<f64>], y: &[f64]) -> Result<Vec<TrainedExpert>> {
    roster
        .par_iter()
        .map(|c| TrainedExpert::fit(c, x, y).map_err(|e| e.context(format!("expert `{}`", c.name))))
        .collect()
}

fn train_head(
    label: String,
    x: &[Vec<f64>],
    y: &[f64],
    strata: &[Target],
    config: &ModelConfig,
    head: usize,
) -> Result<Head> {
    let roster = &config.roster;
    let experts = fit_all(roster, x, y)?;
    let n = y.len();
    let mut p = vec![vec![0.0; roster.len()]; n];
    if config.gating.in_sample {
        for (e, expert) in experts.iter().enumerate() {
            for (row, xi) in p.iter_mut().zip(x) {
                row[e] = expert.predict(xi)?;
            }
        }
    } else {
        let folds = stratified_kfold(strata, config.k, derive_seed(config.seed, 2_000_000 + head as u64))?;
        let jobs: Vec<(usize, usize)> = (0..config.k).flat_map(|f| (0..roster.len()).map(move |e| (f, e))).collect();
        let results: Vec<(usize, usize, Vec<f64>)> = jobs
            .par_iter()
            .map(|&(f, e)| {
                let train = folds.train_indices(f);
                let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
                let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let expert = TrainedExpert::fit(&roster[e], &tx, &ty)
                    .map_err(|err| err.context(format!("expert `{}` on fold {f}", roster[e].name)))?;
                let preds = folds.test_indices(f).iter().map(|&i| expert.predict(&x[i])).collect::<Result<_>>()?;
                Ok((f, e, preds))
            })
            .collect::<Result<_>>()?;
        for (f, e, preds) in results {
            for (i, v) in folds.test_indices(f).into_iter().zip(preds) {
                p[i][e] = v;
            }
        }
    }
    let gate = train_gating(&p, y, &config.training(head)).map_err(|e| e.context(format!("gate for head `{label}`")))?;
    Ok(Head { label, experts, gate })
}

const FORMAT: &str = "affect-model 1";

impl ExpertsModel {
    pub fn train(task: TaskKind, x: &[Vec<f64>], targets: &[Target], config: &ModelConfig) -> Result<ExpertsModel> {
        let config = config.resolved(task);
        config.validate()?;
        if x.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: targets.len(),
            });
        }
        let heads = head_targets(task, targets)?
            .into_iter()
            .enumerate()
            .map(|(h, (label, y, strata))| train_head(label, x, &y, &strata, &config, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExpertsModel { task, config, heads })
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn heads(&self) -> &[Head] {
        &self.heads
    }

    pub fn input_dim(&self) -> usize {
        self.heads[0].experts[0].input_dim()
    }

    /// Per-head, per-expert raw predictions for one sample.
    pub fn expert_predictions(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.heads.iter().map(|h| h.experts.iter().map(|e| e.predict(x)).collect()).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Target> {
        let nets: Vec<GatingNetwork> = self.heads.iter().map(|h| h.gate.net.clone()).collect();
        gate_predict(&nets, &self.expert_predictions(x)?, self.task)
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<Target>> {
        rows.par_iter().map(|r| self.predict(r)).collect()
    }

    fn manifest(&self) -> String {
        let c = &self.config;
        let names: Vec<&str> = c.roster.iter().map(|e| e.name.as_str()).collect();
        let heads: Vec<&str> = self.heads.iter().map(|h| h.label.as_str()).collect();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let _ = writeln!(out, "format = {FORMAT}");
        let _ = writeln!(out, "task = {}", self.task);
        let _ = writeln!(out, "experts = {}", names.join(", "));
        let _ = writeln!(out, "seed = {}", c.seed);
        let _ = writeln!(out, "k = {}", c.k);
        let _ = writeln!(out, "eta = {:?}", c.gating.eta);
        let _ = writeln!(out, "epochs = {}", c.gating.epochs);
        let _ = writeln!(out, "tolerance = {:?}", c.gating.tolerance);
        let _ = writeln!(out, "exact_gradient = {}", c.gating.exact_gradient);
        let _ = writeln!(out, "in_sample = {}", c.gating.in_sample);
        let _ = writeln!(out, "freeze_bias = {}", c.gating.freeze_bias);
        let _ = writeln!(out, "heads = {}", heads.join(", "));
        for h in &self.heads {
            let _ = writeln!(out, "head.{}.w = {}", h.label, list(h.gate.net.w()));
            let _ = writeln!(out, "head.{}.b = {}", h.label, list(h.gate.net.b()));
            let _ = writeln!(out, "head.{}.epochs_run = {}", h.label, h.gate.trace.len());
        }
        out
    }

    fn trace_csv(&self) -> String {
        let mut out = String::from("head,epoch,mean_error\n");
        for h in &self.heads {
            for (i, e) in h.gate.trace.iter().enumerate() {
                let _ = writeln!(out, "{},{},{e:?}", h.label, i + 1);
            }
        }
        out
    }

    /// Write `manifest.txt`, `trace.csv` and one file per expert under
    /// `experts/`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let experts_dir = dir.join("experts");
        fs::create_dir_all(&experts_dir).map_err(|e| Error::io(&experts_dir, e))?;
        for h in &self.heads {
            for e in &h.experts {
                let path = experts_dir.join(format!("{}.{}.expert", h.label, e.name()));
                fs::write(&path, e.to_bytes()).map_err(|err| Error::io(&path, err))?;
            }
        }
        for (name, body) in [("manifest.txt", self.manifest()), ("trace.csv", self.trace_csv())] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ExpertsModel> {
        let path = dir.join("manifest.txt");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let name = path.display().to_string();
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| Error::parse(&name, i + 1, "expected `key = value`"))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| kv.get(k).map(String::as_str).ok_or_else(|| Error::Format(format!("{name}: missing `{k}`")));
        fn num<T: std::str::FromStr>(name: &str, k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Format(format!("{name}: bad value `{v}` for `{k}`")))
        }
        let list = |k: &str| -> Result<Vec<f64>> { get(k)?.split(", ").map(|v| num(&name, k, v)).collect() };
        let names = |k: &str| -> Result<Vec<String>> { Ok(get(k)?.split(", ").map(str::to_string).collect()) };

        if get("format")? != FORMAT {
            return Err(Error::Format(format!("{name}: unsupported format `{}`", get("format")?)));
        }
        let task: TaskKind = get("task")?.parse()?;
        let expert_names = names("experts")?;
        let gating = GatingConfig {
            eta: num(&name, "eta", get("eta")?)?,
            epochs: num(&name, "epochs", get("epochs")?)?,
            tolerance: num(&name, "tolerance", get("tolerance")?)?,
            exact_gradient: num(&name, "exact_gradient", get("exact_gradient")?)?,
            in_sample: num(&name, "in_sample", get("in_sample")?)?,
            freeze_bias: num(&name, "freeze_bias", get("freeze_bias")?)?,
        };
        let traces = read_traces(&dir.join("trace.csv"))?;
        let mut heads = Vec::new();
        for label in names("heads")? {
            let mut experts = Vec::new();
            for e in &expert_names {
                let p = dir.join("experts").join(format!("{label}.{e}.expert"));
                let bytes = fs::read(&p).map_err(|err| Error::io(&p, err))?;
                experts.push(TrainedExpert::from_bytes(&bytes).map_err(|err| err.context(p.display().to_string()))?);
            }
            let net = GatingNetwork::from_parts(list(&format!("head.{label}.w"))?, list(&format!("head.{label}.b"))?, gating.eta)?;
            if net.expert_count() != experts.len() {
                return Err(Error::Format(format!("{name}: head `{label}` gate size does not match the roster")));
            }
            let trace = traces.get(&label).cloned().unwrap_or_default();
            heads.push(Head {
                label,
                experts,
                gate: TrainedGate { net, trace },
            });
        }
        let expected_heads = if task == TaskKind::Ec { EC_LABELS.len() } else { 1 };
        if heads.len() != expected_heads {
            return Err(Error::Format(format!("{name}: {task} needs {expected_heads} heads, found {}", heads.len())));
        }
        let config = ModelConfig {
            k: num(&name, "k", get("k")?)?,
            seed: num(&name, "seed", get("seed")?)?,
            gating,
            roster: heads[0].experts.iter().map(|e| e.config().clone()).collect(),
        };
        Ok(ExpertsModel { task, config, heads })
    }
}

fn read_traces(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let [head, _, e] = fields[..] else {
            return Err(Error::parse(&name, i + 1, "expected head,epoch,mean_error"));
        };
        let e: f64 = e.parse().map_err(|_| Error::parse(&name, i + 1, "bad mean_error"))?;
        out.entry(head.to_string()).or_default().push(e);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Emotion, LabelSet};
    use crate::experts::Family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config() -> ModelConfig {
        ModelConfig {
            k: 3,
            seed: 4,
            gating: GatingConfig { epochs: 20, ..Default::default() },
            roster: vec![
                ExpertConfig::new("ridge", Family::Ridge),
                ExpertConfig::new("gb", Family::GradientBoosting).with("n_estimators", 20.0),
            ],
        }
    }

    fn data(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let y = x.iter().map(|r| 0.7 * r[0] + 0.2 * r[1]).collect();
        (x, y)
    }

    #[test]
    fn regression_round_trip() {
        let (x, y) = data(40);
        let t: Vec<Target> = y.iter().map(|&v| Target::Scalar(v)).collect();
        let task = TaskKind::EiReg(Emotion::Joy);
        let m = ExpertsModel::train(task, &x, &t, &small_config()).unwrap();
        assert_eq!(m.heads().len(), 1);
        assert!(m.config().roster.iter().all(|e| e.params.contains_key("seed")));
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = ExpertsModel::load(dir.path()).unwrap();
        assert_eq!(back, m);
        for r in &x {
            assert_eq!(back.predict(r).unwrap(), m.predict(r).unwrap());
        }
    }

    #[test]
    fn ec_has_eleven_heads() {
        let (x, y) = data(30);
        let t: Vec<Target> = y
            .iter()
            .map(|&v| {
                let mut l = LabelSet::empty();
                l.set(4, v > 0.45);
                l.set(0, v < 0.3);
                Target::LabelSet(l)
            })
            .collect();
        let m = ExpertsModel::train(TaskKind::Ec, &x, &t, &small_config()).unwrap();
        assert_eq!(m.heads().len(), 11);
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        assert_eq!(ExpertsModel::load(dir.path()).unwrap(), m);
        assert!(matches!(m.predict(&x[0]).unwrap(), Target::LabelSet(_)));
    }

    #[test]
    fn in_sample_differs_from_out_of_fold() {
        let (x, y) = data(40);
        let t: Vec<Target> = y.iter().map(|&v| Target::Scalar(v)).collect();
        let task = TaskKind::VReg;
        let mut c = small_config();
        let oof = ExpertsModel::train(task, &x, &t, &c).unwrap();
        c.gating.in_sample = true;
        let ins = ExpertsModel::train(task, &x, &t, &c).unwrap();
        assert_eq!(oof.heads()[0].experts, ins.heads()[0].experts);
        assert_ne!(oof.heads()[0].gate, ins.heads()[0].gate);
    }

    #[test]
    fn config_errors() {
        let (x, y) = data(10);
        let t: Vec<Target> = y.iter().map(|&v| Target::Scalar(v)).collect();
        let mut c = small_config();
        c.roster.push(ExpertConfig::new("ridge", Family::Lasso));
        assert!(ExpertsModel::train(TaskKind::VReg, &x, &t, &c).is_err());
        let mut c = small_config();
        c.k = 11;
        assert!(ExpertsModel::train(TaskKind::VReg, &x, &t, &c).is_err());
        let c = ModelConfig::default();
        assert_eq!(c.resolved(TaskKind::VOc).roster.len(), 4);
    }

    #[test]
    fn corrupt_manifest() {
        let (x, y) = data(20);
        let t: Vec<Target> = y.iter().map(|&v| Target::Scalar(v)).collect();
        let m = ExpertsModel::train(TaskKind::VReg, &x, &t, &small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let p = dir.path().join("manifest.txt");
        let text = fs::read_to_string(&p).unwrap().replace("affect-model 1", "affect-model 2");
        fs::write(&p, text).unwrap();
        assert!(matches!(ExpertsModel::load(dir.path()), Err(Error::Format(_))));
    }
}
