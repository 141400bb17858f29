//! Evaluation reports and their on-disk form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{Emotion, LabelSet, Target, TaskFamily, TaskKind};
use crate::error::{Error, Result};

use super::metrics::{jaccard_accuracy, macro_avg, macro_f1, micro_f1, pearson, pearson_gold_subset};

/// Metric value; `NaN` marks a metric that is undefined on the given data.
pub type Scores = BTreeMap<String, f64>;

pub const GOLD_SUBSET_LO: f64 = 0.5;

/// Name of the headline metric for a task family.
pub fn primary_metric(family: TaskFamily) -> &'static str {
    match family {
        TaskFamily::Ec => "jaccard",
        _ => "pearson",
    }
}

fn defined(r: Result<f64>) -> Result<f64> {
    match r {
        Ok(v) => Ok(v),
        Err(Error::Undefined(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

fn numeric(targets: &[Target]) -> Result<Vec<f64>> {
    targets
        .iter()
        .map(|t| t.as_numeric().ok_or_else(|| Error::InvalidInput("expected a single-valued target".into())))
        .collect()
}

fn label_sets(targets: &[Target]) -> Result<Vec<LabelSet>> {
    targets
        .iter()
        .map(|t| match t {
            Target::LabelSet(l) => Ok(*l),
            _ => Err(Error::InvalidInput("expected a label-set target".into())),
        })
        .collect()
}

/// All metrics of one task on one set of predictions.
pub fn score_predictions(task: TaskKind, gold: &[Target], pred: &[Target]) -> Result<Scores> {
    if gold.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            got: pred.len(),
        });
    }
    let mut s = Scores::new();
    if task == TaskKind::Ec {
        let (g, p) = (label_sets(gold)?, label_sets(pred)?);
        s.insert("jaccard".into(), jaccard_accuracy(&g, &p)?);
        s.insert("micro_f1".into(), micro_f1(&g, &p)?);
        s.insert("macro_f1".into(), macro_f1(&g, &p)?);
        return Ok(s);
    }
    let (g, p) = (numeric(gold)?, numeric(pred)?);
    s.insert("pearson".into(), defined(pearson(&g, &p))?);
    if task.is_regression() {
        s.insert("pearson_gold_0.5".into(), defined(pearson_gold_subset(&g, &p, GOLD_SUBSET_LO))?);
    } else {
        // "no emotion" is display class 0: class 0 for EI-oc, neutral for V-oc
        let (gs, ps): (Vec<f64>, Vec<f64>) = gold
            .iter()
            .zip(&g)
            .zip(&p)
            .filter(|((t, _), _)| matches!(t, Target::Ordinal(c) if task.display_class(*c) != 0))
            .map(|((_, g), p)| (*g, *p))
            .unzip();
        s.insert("pearson_some_emotion".into(), defined(pearson(&gs, &ps))?);
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub family: TaskFamily,
    /// Scores of a single-dataset task (valence, E-c).
    pub metrics: Scores,
    /// Scores per emotion for the intensity tasks.
    pub per_emotion: BTreeMap<Emotion, Scores>,
    /// Mean of each metric over the four emotions; filled only when all four
    /// emotions are present and the metric is defined for each.
    pub macro_avg: Scores,
}

impl EvaluationReport {
    /// Build a report from `(task, gold, predicted)` runs of one family.
    pub fn from_runs(runs: &[(TaskKind, Vec<Target>, Vec<Target>)]) -> Result<Self> {
        let Some(first) = runs.first() else {
            return Err(Error::InvalidInput("nothing to evaluate".into()));
        };
        let family = first.0.family();
        let mut report = EvaluationReport {
            family,
            metrics: Scores::new(),
            per_emotion: BTreeMap::new(),
            macro_avg: Scores::new(),
        };
        for (task, gold, pred) in runs {
            if task.family() != family {
                return Err(Error::InvalidInput(format!("cannot mix {family} and {} in one report", task.family())));
            }
            let scores = score_predictions(*task, gold, pred)?;
            match task.emotion() {
                Some(e) => {
                    if report.per_emotion.insert(e, scores).is_some() {
                        return Err(Error::InvalidInput(format!("{e} evaluated twice")));
                    }
                }
                None if runs.len() == 1 => report.metrics = scores,
                None => return Err(Error::InvalidInput(format!("{family} takes exactly one dataset"))),
            }
        }
        if report.per_emotion.len() == Emotion::ALL.len() {
            let names: Vec<String> = report.per_emotion[&Emotion::Anger].keys().cloned().collect();
            for name in names {
                let per: BTreeMap<Emotion, f64> = report.per_emotion.iter().map(|(e, s)| (*e, s[&name])).collect();
                if per.values().all(|v| v.is_finite()) {
                    report.macro_avg.insert(name, macro_avg(&per)?);
                }
            }
        }
        Ok(report)
    }

    pub fn primary(&self) -> Option<f64> {
        let m = primary_metric(self.family);
        if self.family.is_emotion_intensity() {
            self.macro_avg.get(m).copied()
        } else {
            self.metrics.get(m).copied()
        }
    }

    fn rows(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::new();
        for (name, v) in &self.metrics {
            rows.push(("all".to_string(), name.clone(), *v));
        }
        for (e, scores) in &self.per_emotion {
            for (name, v) in scores {
                rows.push((e.to_string(), name.clone(), *v));
            }
        }
        if self.family.is_emotion_intensity() {
            let names: Vec<&String> = self.per_emotion.values().next().map(|s| s.keys().collect()).unwrap_or_default();
            for name in names {
                let v = self.macro_avg.get(name).copied().unwrap_or(f64::NAN);
                rows.push(("macro_avg".to_string(), name.clone(), v));
            }
        }
        rows
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("task = {}\n", self.family);
        for (scope, name, v) in self.rows() {
            let key = if scope == "all" { name } else { format!("{scope}.{name}") };
            let _ = writeln!(out, "{key} = {}", fmt_value(v));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scope,metric,value\n");
        for (scope, name, v) in self.rows() {
            let _ = writeln!(out, "{scope},{name},{}", fmt_value(v));
        }
        out
    }
}

pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "undefined".to_string()
    } else {
        format!("{v}")
    }
}

/// Write `report.txt` and `report.csv` into `dir`.
pub fn emit_report(report: &EvaluationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.metrics.is_empty() && report.per_emotion.values().all(|s| s.is_empty()) {
        return Err(Error::InvalidInput("report has no metrics".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (file, body) in [("report.txt", report.to_text()), ("report.csv", report.to_csv())] {
        let path = dir.join(file);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
