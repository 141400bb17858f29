//! Correlation and multi-label metrics.

use std::collections::BTreeMap;

use crate::corpus::{Emotion, LabelSet};
use crate::error::{Error, Result};
use crate::stats;

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::Undefined(format!("pearson needs at least 2 pairs, got {}", a.len())));
    }
    let (ma, mb) = (stats::mean(a), stats::mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Undefined("pearson of a constant vector".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn filtered_pearson(gold: &[f64], pred: &[f64], keep: impl Fn(f64) -> bool) -> Result<f64> {
    same_len(gold.len(), pred.len())?;
    let (g, p): (Vec<f64>, Vec<f64>) = gold.iter().zip(pred).filter(|(g, _)| keep(**g)).map(|(g, p)| (*g, *p)).unzip();
    pearson(&g, &p)
}

/// Pearson over the pairs whose gold value is at least `lo`.
pub fn pearson_gold_subset(gold: &[f64], pred: &[f64], lo: f64) -> Result<f64> {
    filtered_pearson(gold, pred, |g| g >= lo)
}

/// Pearson over the ordinal pairs whose gold class is not 0 ("no emotion").
pub fn pearson_some_emotion(gold_classes: &[f64], pred_classes: &[f64]) -> Result<f64> {
    filtered_pearson(gold_classes, pred_classes, |g| g >= 1.0)
}

/// Mean per-sample `|G ∩ P| / |G ∪ P|`; two empty sets score 1.
pub fn jaccard_accuracy(gold: &[LabelSet], pred: &[LabelSet]) -> Result<f64> {
    same_len(gold.len(), pred.len())?;
    if gold.is_empty() {
        return Err(Error::InvalidInput("jaccard accuracy needs at least one sample".into()));
    }
    let total: f64 = gold
        .iter()
        .zip(pred)
        .map(|(g, p)| match g.union_len(*p) {
            0 => 1.0,
            u => g.intersection_len(*p) as f64 / u as f64,
        })
        .sum();
    Ok(total / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    /// `2tp / (2tp + fp + fn)`; with nothing to find and nothing predicted
    /// the result is 1.
    fn f1(self) -> f64 {
        match 2 * self.tp + self.fp + self.fn_ {
            0 => 1.0,
            denom => 2.0 * self.tp as f64 / denom as f64,
        }
    }
}

fn label_counts(gold: &[LabelSet], pred: &[LabelSet]) -> Result<[Counts; LabelSet::LEN]> {
    same_len(gold.len(), pred.len())?;
    let mut counts = [Counts::default(); LabelSet::LEN];
    for (g, p) in gold.iter().zip(pred) {
        for (k, c) in counts.iter_mut().enumerate() {
            match (g.get(k), p.get(k)) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(counts)
}

/// F1 over true/false positives and false negatives pooled across all labels.
/// All-empty gold and predictions score 1.
pub fn micro_f1(gold: &[LabelSet], pred: &[LabelSet]) -> Result<f64> {
    let pooled = label_counts(gold, pred)?.iter().fold(Counts::default(), |acc, c| Counts {
        tp: acc.tp + c.tp,
        fp: acc.fp + c.fp,
        fn_: acc.fn_ + c.fn_,
    });
    Ok(pooled.f1())
}

/// Unweighted mean of per-label F1 over the labels that occur in the gold
/// sets or the predictions. A label predicted but never correct scores 0.
/// If no label occurs anywhere the predictions are exact and the score is 1.
pub fn macro_f1(gold: &[LabelSet], pred: &[LabelSet]) -> Result<f64> {
    let counts = label_counts(gold, pred)?;
    let seen: Vec<f64> = counts.iter().filter(|c| c.tp + c.fp + c.fn_ > 0).map(|c| c.f1()).collect();
    Ok(if seen.is_empty() { 1.0 } else { seen.iter().sum::<f64>() / seen.len() as f64 })
}

/// Mean over exactly the four emotions.
pub fn macro_avg(scores: &BTreeMap<Emotion, f64>) -> Result<f64> {
    let missing: Vec<&str> = Emotion::ALL.iter().filter(|e| !scores.contains_key(e)).map(|e| e.as_str()).collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!("macro average is missing {}", missing.join(", "))));
    }
    Ok(Emotion::ALL.iter().map(|e| scores[e]).sum::<f64>() / 4.0)
}
