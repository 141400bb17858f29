//! Run configuration: a TOML file, overridden by command-line flags, and
//! persisted fully resolved next to every run's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use affect_core::eval::folds::DEFAULT_K;
use affect_core::{ExpertConfig, GatingConfig, ModelConfig, PipelineConfig, TaskKind};

pub const CONFIG_FILE: &str = "config.toml";

fn default_k() -> usize {
    DEFAULT_K
}

fn default_features() -> PipelineConfig {
    PipelineConfig::with_groups(&["bow", "tfidf"])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_dir: Option<PathBuf>,
    #[serde(default = "default_features")]
    pub features: PipelineConfig,
    #[serde(default)]
    pub gating: GatingConfig,
    /// Expert roster; empty means the task's default roster.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub experts: Vec<ExpertConfig>,
    /// Search grids keyed by expert name, then hyperparameter.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grid: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config takes every default")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        Ok(toml::from_str(text)?)
    }

    /// Read a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut c = Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        c.resolve_paths(base);
        Ok(c)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.train,
            &mut self.dev,
            &mut self.test,
            &mut self.model_dir,
            &mut self.report_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        self.features.resolve_paths(base);
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            k: self.k,
            seed: self.seed,
            gating: self.gating.clone(),
            roster: self.experts.clone(),
        }
    }

    /// Check everything that can be checked before any data is read.
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            bail!("seed must fit in 63 bits, got {}", self.seed);
        }
        self.features.group_specs()?;
        self.model_config().validate()?;
        for name in self.grid.keys() {
            if !self.experts.is_empty() && !self.experts.iter().any(|e| &e.name == name) {
                bail!("grid.{name} names no expert in the roster");
            }
        }
        Ok(())
    }

    /// The same config with the task pinned and the roster spelled out, so
    /// that re-running from the written file needs no defaults.
    pub fn resolved(&self, task: TaskKind) -> RunConfig {
        let mut c = self.clone();
        c.task = Some(task);
        c.experts = self.model_config().resolved(task).roster;
        c
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Same config with every path made absolute against the working
    /// directory, so the written file can be loaded from anywhere.
    pub fn absolute(&self) -> Result<RunConfig> {
        let mut c = self.clone();
        c.resolve_paths(&std::env::current_dir()?);
        Ok(c)
    }

    /// Write `config.toml` (paths made absolute) into `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(CONFIG_FILE);
        fs::write(&path, self.absolute()?.to_toml()?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use affect_core::{Emotion, Family};

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.seed, c.k), (0, 5));
        assert_eq!(c.features.groups, ["bow", "tfidf"]);
        assert_eq!(c.gating.eta, 0.01);
        assert_eq!(c.gating.epochs, 100);
        c.validate().unwrap();
    }

    #[test]
    fn resolved_round_trip() {
        let c = RunConfig::parse(
            r#"
            seed = 3
            train = "a/train.tsv"
            [features]
            groups = ["tfidf", "deepemoji"]
            caches = { deepemoji = "c.tsv" }
            [gating]
            eta = 0.05
            "#,
        )
        .unwrap();
        let r = c.resolved(TaskKind::EiOc(Emotion::Joy));
        assert_eq!(r.experts.len(), 4);
        assert!(r.experts.iter().all(|e| e.params.contains_key("seed")));
        let back = RunConfig::parse(&r.to_toml().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.resolved(TaskKind::EiOc(Emotion::Joy)), r);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let mut c = RunConfig::parse("train = \"t.tsv\"\n[features]\ngroups = [\"x\"]\ncaches = { x = \"x.tsv\" }").unwrap();
        c.resolve_paths(Path::new("/data"));
        assert_eq!(c.train.unwrap(), Path::new("/data/t.tsv"));
        assert_eq!(c.features.caches["x"], Path::new("/data/x.tsv"));
    }

    #[test]
    fn contradictions_name_the_field() {
        let c = RunConfig::parse("[features]\ngroups = [\"deepemoji\"]").unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("features.caches.deepemoji"), "{err}");
        assert!(RunConfig::parse("bogus = 1").is_err());
        let mut c = RunConfig::default();
        c.experts = vec![ExpertConfig::new("r", Family::Ridge)];
        c.grid.insert("gb".into(), BTreeMap::new());
        assert!(c.validate().unwrap_err().to_string().contains("grid.gb"));
    }
}
