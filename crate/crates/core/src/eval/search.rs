//! Grid search over expert hyperparameters and per-feature-group ablation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::{Dataset, LabelSet, Target, TaskKind};
use crate::error::{Error, Result};
use crate::experts::{ExpertConfig, TrainedExpert};
use crate::features::{FeatureResources, FittedPipeline, PipelineConfig};
use crate::gating::map_score;
use crate::model::{head_targets, ExpertsModel, ModelConfig};

use super::folds::{stratified_kfold, FoldAssignment};
use super::report::{fmt_value, primary_metric, score_predictions};

/// Every combination of the grid's values. Parameter names are visited in
/// sorted order and the last name varies fastest.
pub fn grid_points(grid: &BTreeMap<String, Vec<f64>>) -> Result<Vec<BTreeMap<String, f64>>> {
    if grid.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    let mut points = vec![BTreeMap::new()];
    for (name, values) in grid {
        if values.is_empty() {
            return Err(Error::Config(format!("grid axis `{name}` has no values")));
        }
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(name.clone(), *v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub params: BTreeMap<String, f64>,
    /// Validation score of each fold; `NaN` where the metric is undefined.
    pub fold_scores: Vec<f64>,
    /// Mean over the folds with a defined score.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub expert: String,
    pub metric: &'static str,
    pub table: Vec<GridPoint>,
    pub best: usize,
}

impl GridResult {
    pub fn best_point(&self) -> &GridPoint {
        &self.table[self.best]
    }

    /// `base` with the winning parameters applied.
    pub fn best_config(&self, base: &ExpertConfig) -> ExpertConfig {
        let mut c = base.clone();
        c.params.extend(self.best_point().params.clone());
        c
    }

    pub fn to_csv(&self) -> String {
        let names: Vec<&String> = self.table[0].params.keys().collect();
        let mut out = String::from("expert");
        for n in &names {
            let _ = write!(out, ",{n}");
        }
        let _ = writeln!(out, ",mean_{}", self.metric);
        for p in &self.table {
            out.push_str(&self.expert);
            for v in p.params.values() {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", fmt_value(p.score));
        }
        out
    }
}

fn mean_defined(scores: &[f64]) -> f64 {
    let ok: Vec<f64> = scores.iter().copied().filter(|v| v.is_finite()).collect();
    if ok.is_empty() {
        f64::NAN
    } else {
        ok.iter().sum::<f64>() / ok.len() as f64
    }
}

fn rows(x: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| x[i].clone()).collect()
}

/// Per-fold validation scores of a single expert configuration.
fn cv_expert(config: &ExpertConfig, task: TaskKind, x: &[Vec<f64>], targets: &[Target], folds: &FoldAssignment) -> Result<Vec<f64>> {
    let heads = head_targets(task, targets)?;
    let metric = primary_metric(task.family());
    (0..folds.k())
        .map(|f| {
            let (train, test) = (folds.train_indices(f), folds.test_indices(f));
            let tx = rows(x, &train);
            let mut raw = vec![vec![0.0; heads.len()]; test.len()];
            for (h, (_, y, _)) in heads.iter().enumerate() {
                let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let expert = TrainedExpert::fit(config, &tx, &ty)?;
                for (r, &i) in raw.iter_mut().zip(&test) {
                    r[h] = expert.predict(&x[i])?;
                }
            }
            let pred: Vec<Target> = raw
                .iter()
                .map(|r| {
                    if task == TaskKind::Ec {
                        let mut l = LabelSet::empty();
                        for (k, v) in r.iter().enumerate() {
                            l.set(k, *v >= 0.5);
                        }
                        Target::LabelSet(l)
                    } else {
                        map_score(task, r[0])
                    }
                })
                .collect();
            let gold: Vec<Target> = test.iter().map(|&i| targets[i]).collect();
            Ok(score_predictions(task, &gold, &pred)?[metric])
        })
        .collect()
}

/// Exhaustive k-fold grid search for one expert. Points are scored by the
/// task's headline metric; the first point with the highest mean wins.
pub fn grid_search(
    base: &ExpertConfig,
    grid: &BTreeMap<String, Vec<f64>>,
    task: TaskKind,
    x: &[Vec<f64>],
    targets: &[Target],
    k: usize,
    seed: u64,
) -> Result<GridResult> {
    let points = grid_points(grid)?;
    let folds = stratified_kfold(targets, k, seed)?;
    let table: Vec<GridPoint> = points
        .into_par_iter()
        .map(|params| {
            let mut config = base.clone();
            config.params.extend(params.clone());
            let config = config.with_default_seed(seed);
            let label = params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ");
            let fold_scores = cv_expert(&config, task, x, targets, &folds)
                .map_err(|e| e.context(format!("grid point `{}` ({label})", base.name)))?;
            Ok(GridPoint {
                score: mean_defined(&fold_scores),
                params,
                fold_scores,
            })
        })
        .collect::<Result<_>>()?;
    let mut best: Option<usize> = None;
    for (i, p) in table.iter().enumerate() {
        if p.score.is_finite() && best.is_none_or(|b| p.score > table[b].score) {
            best = Some(i);
        }
    }
    let best = best.ok_or_else(|| Error::Undefined(format!("no grid point of `{}` has a defined score", base.name)))?;
    Ok(GridResult {
        expert: base.name.clone(),
        metric: primary_metric(task.family()),
        table,
        best,
    })
}

/// Out-of-fold predictions of the full pipeline: for each fold the feature
/// pipeline and the experts model are fit on the remaining folds.
pub fn cross_validate(
    pipeline: &PipelineConfig,
    resources: &FeatureResources,
    dataset: &Dataset,
    model: &ModelConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<Target>> {
    let targets = dataset.targets()?;
    let folds = stratified_kfold(&targets, k, seed)?;
    let mut out = vec![None; targets.len()];
    for f in 0..k {
        let train = dataset.subset(&folds.train_indices(f));
        let test_idx = folds.test_indices(f);
        let test = dataset.subset(&test_idx);
        let fitted = FittedPipeline::fit(pipeline, resources, train.samples())?;
        let tx = fitted.transform(train.samples(), resources)?;
        let m = ExpertsModel::train(dataset.task(), &tx, &train.targets()?, model)?;
        let preds = m.predict_many(&fitted.transform(test.samples(), resources)?)?;
        for (i, p) in test_idx.into_iter().zip(preds) {
            out[i] = Some(p);
        }
    }
    Ok(out.into_iter().map(|p| p.expect("every sample is held out once")).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub group: String,
    pub scope: String,
    pub metric: &'static str,
    /// `NaN` when the metric is undefined (for example constant predictions).
    pub score: f64,
}

pub const CONCATENATED: &str = "concatenated";

/// Cross-validated score of every configured group on its own, then of all
/// groups concatenated. Scores are averaged over folds, skipping folds where
/// the metric is undefined.
pub fn feature_ablation(
    pipeline: &PipelineConfig,
    resources: &FeatureResources,
    dataset: &Dataset,
    model: &ModelConfig,
    k: usize,
    seed: u64,
) -> Result<Vec<AblationRow>> {
    pipeline.group_specs()?;
    if pipeline.groups.len() < 2 {
        return Err(Error::Config("ablation needs at least two feature groups".into()));
    }
    let task = dataset.task();
    let metric = primary_metric(task.family());
    let scope = match task.affect_dimension() {
        "" => "all".to_string(),
        d => d.to_string(),
    };
    let gold = dataset.targets()?;
    let folds = stratified_kfold(&gold, k, seed)?;
    let runs: Vec<(String, PipelineConfig)> = pipeline
        .groups
        .iter()
        .map(|g| (g.clone(), pipeline.only(g)))
        .chain([(CONCATENATED.to_string(), pipeline.clone())])
        .collect();
    runs.into_iter()
        .map(|(group, config)| {
            let pred = cross_validate(&config, resources, dataset, model, k, seed)
                .map_err(|e| e.context(format!("ablation group `{group}`")))?;
            let per_fold = (0..k)
                .map(|f| {
                    let idx = folds.test_indices(f);
                    let g: Vec<Target> = idx.iter().map(|&i| gold[i]).collect();
                    let p: Vec<Target> = idx.iter().map(|&i| pred[i]).collect();
                    Ok(score_predictions(task, &g, &p)?[metric])
                })
                .collect::<Result<Vec<f64>>>()?;
            let score = mean_defined(&per_fold);
            Ok(AblationRow {
                group,
                scope: scope.clone(),
                metric,
                score,
            })
        })
        .collect()
}

/// Plot-ready `group,emotion,<metric>` table.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let metric = rows.first().map_or("pearson", |r| r.metric);
    let mut out = format!("group,emotion,{metric}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.group, r.scope, fmt_value(r.score));
    }
    out
}
