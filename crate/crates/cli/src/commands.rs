//! The batch commands behind the `affect` binary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use affect_core::corpus::{detect_task, load_tsv, merge, write_tsv};
use affect_core::eval::report::{emit_report, EvaluationReport};
use affect_core::eval::search::{ablation_csv, feature_ablation, grid_search, AblationRow};
use affect_core::features::dense::DenseCache;
use affect_core::{Dataset, ExpertsModel, FeatureResources, FittedPipeline, Split, Target, TaskFamily, TaskKind};

use crate::config::{RunConfig, CONFIG_FILE};

pub const FEATURES_FILE: &str = "features.json";

/// A task named in full (`EI-reg:anger`) or by family (`EI-reg`), in which
/// case the emotion is read from each data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskSpec {
    Kind(TaskKind),
    Family(TaskFamily),
}

impl FromStr for TaskSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(k) = s.parse::<TaskKind>() {
            return Ok(TaskSpec::Kind(k));
        }
        s.parse::<TaskFamily>()
            .map(TaskSpec::Family)
            .map_err(|_| anyhow!("unknown task `{s}` (try EI-reg, EI-oc:joy, V-reg, V-oc or E-c)"))
    }
}

impl TaskSpec {
    pub fn family(self) -> TaskFamily {
        match self {
            TaskSpec::Kind(k) => k.family(),
            TaskSpec::Family(f) => f,
        }
    }

    pub fn resolve(self, file: &Path) -> Result<TaskKind> {
        match self {
            TaskSpec::Kind(k) => Ok(k),
            TaskSpec::Family(f) => detect_task(file, f).with_context(|| format!("detecting the task of {}", file.display())),
        }
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| anyhow!("missing {flag} (flag or config field)"))
}

fn task_of(cfg: &RunConfig) -> Result<TaskKind> {
    cfg.task.ok_or_else(|| anyhow!("missing --task (flag or config field `task`)"))
}

/// Training data: the train split, merged with dev when one is given.
fn training_set(cfg: &RunConfig, task: TaskKind) -> Result<Dataset> {
    let train = load_tsv(required(&cfg.train, "--train")?, task, Split::Train)?;
    match &cfg.dev {
        Some(dev) => Ok(merge(&train, &load_tsv(dev, task, Split::Dev)?)?),
        None => Ok(train),
    }
}

fn fit_features(cfg: &RunConfig, data: &Dataset) -> Result<(FeatureResources, FittedPipeline)> {
    let resources = FeatureResources::load(&cfg.features)?;
    let fitted = FittedPipeline::fit(&cfg.features, &resources, data.samples())?;
    Ok((resources, fitted))
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// Fit the feature pipeline on the training data and write the fitted
/// pipeline plus one feature cache per available split.
pub fn featurize(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let task = task_of(cfg)?;
    let data = training_set(cfg, task)?;
    let (resources, fitted) = fit_features(cfg, &data)?;
    let mut written = vec![cfg.resolved(task).save(out)?];
    let path = out.join(FEATURES_FILE);
    write_file(&path, fitted.to_json()?)?;
    written.push(path);
    let mut splits = vec![("train", data)];
    if let Some(test) = &cfg.test {
        splits.push(("test", load_tsv(test, task, Split::Test)?));
    }
    for (name, ds) in splits {
        let rows = fitted.transform(ds.samples(), &resources)?;
        let mut cache = DenseCache::new("features", fitted.dim());
        for (s, r) in ds.samples().iter().zip(rows) {
            cache.insert(&s.id, r)?;
        }
        let ids: Vec<&str> = ds.samples().iter().map(|s| s.id.as_str()).collect();
        let mut buf = Vec::new();
        cache.write(&ids, &mut buf)?;
        let path = out.join(format!("{name}.features.tsv"));
        write_file(&path, buf)?;
        written.push(path);
    }
    Ok(written)
}

/// Train the experts and the gate and write the model directory.
pub fn train(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let task = task_of(cfg)?;
    let dir = required(&cfg.model_dir, "--model-dir")?.to_path_buf();
    let data = training_set(cfg, task)?;
    let (resources, fitted) = fit_features(cfg, &data)?;
    let x = fitted.transform(data.samples(), &resources)?;
    let model = ExpertsModel::train(task, &x, &data.targets()?, &cfg.model_config())?;
    model.save(&dir)?;
    write_file(&dir.join(FEATURES_FILE), fitted.to_json()?)?;
    let mut persisted = cfg.resolved(task);
    persisted.experts = model.config().roster.clone();
    persisted.save(&dir)?;
    Ok(dir)
}

/// Predict a task file with a trained model. The output mirrors the input
/// layout with predictions in the target columns.
pub fn predict(model_dir: &Path, test: &Path, out: &Path) -> Result<PathBuf> {
    let mut cfg = RunConfig::load(&model_dir.join(CONFIG_FILE))?;
    let task = task_of(&cfg)?;
    let json = fs::read_to_string(model_dir.join(FEATURES_FILE))
        .with_context(|| format!("reading {}", model_dir.join(FEATURES_FILE).display()))?;
    let fitted = FittedPipeline::from_json(&json)?;
    let resources = FeatureResources::load(&fitted.config)?;
    let model = ExpertsModel::load(model_dir)?;
    let data = load_tsv(test, task, Split::Test)?;
    let preds = model.predict_many(&fitted.transform(data.samples(), &resources)?)?;
    let labeled = data.with_targets(&preds.into_iter().map(Some).collect::<Vec<_>>())?;
    let mut buf = Vec::new();
    write_tsv(&labeled, &mut buf)?;
    write_file(out, buf)?;
    cfg.test = Some(test.to_path_buf());
    cfg.model_dir = Some(model_dir.to_path_buf());
    let sidecar = out.with_extension("config.toml");
    write_file(&sidecar, cfg.absolute()?.to_toml()?)?;
    Ok(out.to_path_buf())
}

/// Score prediction files against gold files and write the report.
pub fn evaluate(spec: TaskSpec, pairs: &[(PathBuf, PathBuf)], report_dir: &Path) -> Result<EvaluationReport> {
    if pairs.is_empty() {
        bail!("evaluate needs at least one --gold/--pred pair");
    }
    let mut runs = Vec::new();
    for (gold_path, pred_path) in pairs {
        let task = spec.resolve(gold_path)?;
        let gold = load_tsv(gold_path, task, Split::Test)?;
        let pred = load_tsv(pred_path, task, Split::Test)?;
        let by_id: HashMap<&str, Option<Target>> = pred.samples().iter().map(|s| (s.id.as_str(), s.target)).collect();
        let mut g = Vec::with_capacity(gold.len());
        let mut p = Vec::with_capacity(gold.len());
        for s in gold.samples() {
            let gt = s.target.ok_or_else(|| anyhow!("{}: sample `{}` has no gold label", gold_path.display(), s.id))?;
            let pt = by_id
                .get(s.id.as_str())
                .copied()
                .flatten()
                .ok_or_else(|| anyhow!("{}: no prediction for sample `{}`", pred_path.display(), s.id))?;
            g.push(gt);
            p.push(pt);
        }
        runs.push((task, g, p));
    }
    let report = EvaluationReport::from_runs(&runs)?;
    emit_report(&report, report_dir)?;
    let persisted = RunConfig {
        task: Some(runs[0].0),
        test: Some(pairs[0].0.clone()),
        report_dir: Some(report_dir.to_path_buf()),
        ..RunConfig::default()
    };
    persisted.save(report_dir)?;
    Ok(report)
}

/// Grid-search every expert that has a `[grid.<name>]` table; write one CV
/// table per expert and a config with the winning hyperparameters.
pub fn gridsearch(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.grid.is_empty() {
        bail!("no [grid.<expert>] tables in the config");
    }
    let task = task_of(cfg)?;
    let dir = required(&cfg.report_dir, "--report-dir")?;
    let data = training_set(cfg, task)?;
    let (resources, fitted) = fit_features(cfg, &data)?;
    let x = fitted.transform(data.samples(), &resources)?;
    let targets = data.targets()?;
    let mut best = cfg.resolved(task);
    let mut written = Vec::new();
    for (name, grid) in &cfg.grid {
        let idx = best
            .experts
            .iter()
            .position(|e| &e.name == name)
            .ok_or_else(|| anyhow!("grid.{name} names no expert in the roster"))?;
        let result = grid_search(&best.experts[idx], grid, task, &x, &targets, cfg.k, cfg.seed)?;
        let path = dir.join(format!("gridsearch-{name}.csv"));
        write_file(&path, result.to_csv())?;
        written.push(path);
        best.experts[idx] = result.best_config(&best.experts[idx]);
    }
    let path = dir.join("best_config.toml");
    write_file(&path, best.absolute()?.to_toml()?)?;
    written.push(path);
    written.push(cfg.resolved(task).save(dir)?);
    Ok(written)
}

/// Per-group ablation over one or more training files (one per emotion for
/// the intensity tasks).
pub fn ablate(cfg: &RunConfig, spec: TaskSpec, trains: &[PathBuf]) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let dir = required(&cfg.report_dir, "--report-dir")?;
    if trains.is_empty() {
        bail!("ablate needs at least one --train file");
    }
    let resources = FeatureResources::load(&cfg.features)?;
    let mut rows = Vec::new();
    for path in trains {
        let task = spec.resolve(path)?;
        let data = load_tsv(path, task, Split::Train)?;
        rows.extend(feature_ablation(&cfg.features, &resources, &data, &cfg.resolved(task).model_config(), cfg.k, cfg.seed)?);
    }
    write_file(&dir.join("ablation.csv"), ablation_csv(&rows))?;
    let mut text = String::new();
    for r in &rows {
        let _ = writeln!(text, "{}.{}.{} = {}", r.scope, r.group, r.metric, affect_core::eval::report::fmt_value(r.score));
    }
    write_file(&dir.join("ablation.txt"), text)?;
    let mut persisted = cfg.clone();
    persisted.task = Some(spec.resolve(&trains[0])?);
    persisted.train = Some(trains[0].clone());
    persisted.save(dir)?;
    Ok(rows)
}
