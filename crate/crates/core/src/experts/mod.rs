//! Expert predictors behind one fit/predict interface.
//!
//! An [`ExpertConfig`] names a family and a map of numeric hyperparameters.
//! Unknown keys are rejected; absent keys take the family default listed in
//! [`Family::param_specs`]. Integer-valued keys must hold whole numbers, and a
//! `max_depth` or `num_leaves` of 0 means "no limit".

pub mod boosting;
pub mod forest;
pub mod linear;
pub mod mlp;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::TaskKind;
use crate::error::{Error, Result};

use boosting::{BoostingParams, GradientBoosting};
use forest::{ForestParams, RandomForest};
use linear::{LinearModel, LinearParams};
use mlp::{Mlp, MlpParams};
use tree::TreeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ridge,
    Lasso,
    Mlp,
    RandomForest,
    GradientBoosting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Range {
    /// x >= 0
    NonNegative,
    /// x > 0
    Positive,
    /// integer >= 0
    Count,
    /// integer >= 1
    PositiveCount,
    /// 0 < x <= 1
    Fraction,
    Flag,
}

/// One accepted hyperparameter: key, default value, valid range.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: f64,
    range: Range,
}

const fn spec(key: &'static str, default: f64, range: Range) -> ParamSpec {
    ParamSpec { key, default, range }
}

const SEED: ParamSpec = spec("seed", 0.0, Range::Count);

const RIDGE: &[ParamSpec] = &[
    spec("l2", 1.0, Range::NonNegative),
    spec("max_iter", 1000.0, Range::PositiveCount),
    spec("tol", 1e-6, Range::Positive),
    SEED,
];
const LASSO: &[ParamSpec] = &[
    spec("l1", 0.01, Range::NonNegative),
    spec("l2", 0.0, Range::NonNegative),
    spec("max_iter", 1000.0, Range::PositiveCount),
    spec("tol", 1e-6, Range::Positive),
    SEED,
];
const MLP: &[ParamSpec] = &[
    spec("hidden_units", 128.0, Range::PositiveCount),
    spec("learning_rate", 1e-3, Range::Positive),
    spec("epochs", 200.0, Range::PositiveCount),
    spec("batch_size", 32.0, Range::PositiveCount),
    spec("l2", 1e-4, Range::NonNegative),
    SEED,
];
const FOREST: &[ParamSpec] = &[
    spec("n_estimators", 100.0, Range::PositiveCount),
    spec("max_depth", 0.0, Range::Count),
    spec("min_samples_leaf", 1.0, Range::PositiveCount),
    spec("max_features", 1.0 / 3.0, Range::Fraction),
    spec("bootstrap", 1.0, Range::Flag),
    SEED,
];
const BOOSTING: &[ParamSpec] = &[
    spec("n_estimators", 100.0, Range::PositiveCount),
    spec("learning_rate", 0.1, Range::Positive),
    spec("max_depth", 3.0, Range::Count),
    spec("num_leaves", 0.0, Range::Count),
    spec("min_samples_leaf", 1.0, Range::PositiveCount),
    SEED,
];

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Ridge,
        Family::Lasso,
        Family::Mlp,
        Family::RandomForest,
        Family::GradientBoosting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ridge => "ridge",
            Family::Lasso => "lasso",
            Family::Mlp => "mlp",
            Family::RandomForest => "random_forest",
            Family::GradientBoosting => "gradient_boosting",
        }
    }

    pub fn param_specs(self) -> &'static [ParamSpec] {
        match self {
            Family::Ridge => RIDGE,
            Family::Lasso => LASSO,
            Family::Mlp => MLP,
            Family::RandomForest => FOREST,
            Family::GradientBoosting => BOOSTING,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown expert family `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpertConfig {
    pub name: String,
    pub family: Family,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ExpertConfig {
    pub fn new(name: impl Into<String>, family: Family) -> Self {
        ExpertConfig {
            name: name.into(),
            family,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Set `seed` unless the config already pins one.
    pub fn with_default_seed(mut self, seed: u64) -> Self {
        // seeds are stored as f64; keep them exactly representable
        let seed = seed >> 11;
        self.params.entry("seed".to_string()).or_insert(seed as f64);
        self
    }

    /// Check every key and value against the family's specs.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("expert name must be non-empty".into()));
        }
        let specs = self.family.param_specs();
        for (key, &value) in &self.params {
            let Some(spec) = specs.iter().find(|s| s.key == key) else {
                let known: Vec<&str> = specs.iter().map(|s| s.key).collect();
                return Err(Error::Config(format!(
                    "expert `{}`: unknown {} hyperparameter `{key}` (accepted: {})",
                    self.name,
                    self.family,
                    known.join(", ")
                )));
            };
            let whole = value.fract() == 0.0;
            let ok = value.is_finite()
                && match spec.range {
                    Range::NonNegative => value >= 0.0,
                    Range::Positive => value > 0.0,
                    Range::Count => whole && value >= 0.0,
                    Range::PositiveCount => whole && value >= 1.0,
                    Range::Fraction => value > 0.0 && value <= 1.0,
                    Range::Flag => value == 0.0 || value == 1.0,
                };
            if !ok {
                return Err(Error::Config(format!(
                    "expert `{}`: {key} = {value} is outside its valid range",
                    self.name
                )));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or_else(|| {
            self.family
                .param_specs()
                .iter()
                .find(|s| s.key == key)
                .map(|s| s.default)
                .expect("key belongs to the family")
        })
    }

    fn count(&self, key: &str) -> usize {
        self.get(key) as usize
    }

    fn limit(&self, key: &str) -> Option<usize> {
        Some(self.count(key)).filter(|&v| v > 0)
    }

    fn seed(&self) -> u64 {
        self.get("seed") as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum ExpertModel {
    Linear(LinearModel),
    Mlp(Mlp),
    RandomForest(RandomForest),
    GradientBoosting(GradientBoosting),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedExpert {
    config: ExpertConfig,
    input_dim: usize,
    model: ExpertModel,
}

const HEADER: &str = "affect-expert 1";

fn check_training_data(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "expert training needs at least 2 samples, got {}",
            y.len()
        )));
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite feature in row {i}")));
        }
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite target in row {i}")));
    }
    Ok(d)
}

impl TrainedExpert {
    pub fn fit(config: &ExpertConfig, x: &[Vec<f64>], y: &[f64]) -> Result<TrainedExpert> {
        config.validate()?;
        let input_dim = check_training_data(x, y)?;
        let c = config;
        let model = match c.family {
            Family::Ridge | Family::Lasso => {
                let l1 = if c.family == Family::Lasso { c.get("l1") } else { 0.0 };
                ExpertModel::Linear(LinearModel::fit(
                    x,
                    y,
                    &LinearParams {
                        l1,
                        l2: c.get("l2"),
                        max_iter: c.count("max_iter"),
                        tol: c.get("tol"),
                    },
                ))
            }
            Family::Mlp => ExpertModel::Mlp(Mlp::fit(
                x,
                y,
                &MlpParams {
                    hidden_units: c.count("hidden_units"),
                    learning_rate: c.get("learning_rate"),
                    epochs: c.count("epochs"),
                    batch_size: c.count("batch_size"),
                    l2: c.get("l2"),
                    seed: c.seed(),
                },
            )),
            Family::RandomForest => {
                let k = (c.get("max_features") * input_dim as f64).ceil() as usize;
                ExpertModel::RandomForest(RandomForest::fit(
                    x,
                    y,
                    &ForestParams {
                        n_estimators: c.count("n_estimators"),
                        bootstrap: c.get("bootstrap") == 1.0,
                        tree: TreeParams {
                            max_depth: c.limit("max_depth"),
                            max_leaves: None,
                            min_samples_leaf: c.count("min_samples_leaf"),
                            max_features: Some(k.clamp(1, input_dim.max(1))),
                        },
                        seed: c.seed(),
                    },
                ))
            }
            Family::GradientBoosting => ExpertModel::GradientBoosting(GradientBoosting::fit(
                x,
                y,
                &BoostingParams {
                    n_estimators: c.count("n_estimators"),
                    learning_rate: c.get("learning_rate"),
                    tree: TreeParams {
                        max_depth: c.limit("max_depth"),
                        max_leaves: c.limit("num_leaves"),
                        min_samples_leaf: c.count("min_samples_leaf"),
                        max_features: None,
                    },
                },
            )),
        };
        Ok(TrainedExpert {
            config: config.clone(),
            input_dim,
            model,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(match &self.model {
            ExpertModel::Linear(m) => m.predict(x),
            ExpertModel::Mlp(m) => m.predict(x),
            ExpertModel::RandomForest(m) => m.predict(x),
            ExpertModel::GradientBoosting(m) => m.predict(x),
        })
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn config(&self) -> &ExpertConfig {
        &self.config
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn model(&self) -> &ExpertModel {
        &self.model
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{HEADER}\n").into_bytes();
        serde_json::to_writer(&mut out, self).expect("expert state serializes");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TrainedExpert> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("expert file has no header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).unwrap_or("");
        if header != HEADER {
            return Err(Error::Format(format!(
                "unsupported expert header `{}` (expected `{HEADER}`)",
                header.escape_debug()
            )));
        }
        let expert: TrainedExpert =
            serde_json::from_slice(&bytes[nl + 1..]).map_err(|e| Error::Format(format!("corrupt expert state: {e}")))?;
        expert.config.validate()?;
        let fits = match &expert.model {
            ExpertModel::Linear(m) => m.coefficients.len() == expert.input_dim,
            ExpertModel::Mlp(m) => m.input_dim() == expert.input_dim,
            ExpertModel::RandomForest(m) => m.max_feature_index().is_none_or(|f| f < expert.input_dim),
            ExpertModel::GradientBoosting(m) => m.max_feature_index().is_none_or(|f| f < expert.input_dim),
        };
        if !fits {
            return Err(Error::Format(format!(
                "expert `{}` state does not match its input dimension {}",
                expert.config.name, expert.input_dim
            )));
        }
        Ok(expert)
    }
}

/// Preset configurations mirroring the published model parameter table.
pub mod presets {
    use super::{ExpertConfig, Family};

    pub fn gradient_boosting() -> ExpertConfig {
        ExpertConfig::new("gradient_boosting", Family::GradientBoosting)
            .with("n_estimators", 3000.0)
            .with("learning_rate", 0.05)
            .with("max_depth", 4.0)
    }

    pub fn xgboost() -> ExpertConfig {
        ExpertConfig::new("xgboost", Family::GradientBoosting)
            .with("n_estimators", 100.0)
            .with("learning_rate", 0.1)
            .with("max_depth", 3.0)
    }

    pub fn lightgbm() -> ExpertConfig {
        ExpertConfig::new("lightgbm", Family::GradientBoosting)
            .with("n_estimators", 720.0)
            .with("learning_rate", 0.05)
            .with("num_leaves", 5.0)
            .with("max_depth", 0.0)
    }

    pub fn random_forest() -> ExpertConfig {
        ExpertConfig::new("random_forest", Family::RandomForest)
            .with("n_estimators", 250.0)
            .with("max_depth", 4.0)
    }

    pub fn neural_network() -> ExpertConfig {
        ExpertConfig::new("neural_network", Family::Mlp).with("hidden_units", 128.0)
    }
}

/// Per-task default roster: all five presets for the regression tasks, no
/// neural network for the ordinal tasks, no LightGBM stand-in for E-c.
pub fn default_roster(task: TaskKind) -> Vec<ExpertConfig> {
    let mut roster = vec![
        presets::gradient_boosting(),
        presets::xgboost(),
        presets::lightgbm(),
        presets::random_forest(),
        presets::neural_network(),
    ];
    match task {
        TaskKind::EiReg(_) | TaskKind::VReg => {}
        TaskKind::EiOc(_) | TaskKind::VOc => roster.retain(|c| c.family != Family::Mlp),
        TaskKind::Ec => roster.retain(|c| c.name != "lightgbm"),
    }
    roster
}
