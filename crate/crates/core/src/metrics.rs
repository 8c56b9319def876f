//! Evaluation metrics: Spearman correlation, MSE, and classification
//! metrics at an efficacy cutoff.
//!
//! A score counts as "efficient" when `score >= cutoff`. Metrics that are
//! undefined for the input (constant ranks, single-class labels) are
//! returned as `None`, never as 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("correlation undefined: {0} input is constant")]
    Undefined(&'static str),
    #[error("cutoff {0} outside (0, 1)")]
    BadCutoff(f64),
    #[error("cutoffs must be nonempty and strictly ascending")]
    BadCutoffList,
}

fn same_len(a: usize, b: usize) -> Result<(), MetricError> {
    if a != b {
        Err(MetricError::LengthMismatch(a, b))
    } else {
        Ok(())
    }
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    same_len(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(MetricError::TooShort {
            need: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 {
        return Err(MetricError::Undefined("first"));
    }
    if sbb == 0.0 {
        return Err(MetricError::Undefined("second"));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    same_len(a.len(), b.len())?;
    pearson(&average_ranks(a), &average_ranks(b))
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    same_len(a.len(), b.len())?;
    if a.is_empty() {
        return Err(MetricError::TooShort { need: 1, got: 0 });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

pub fn binarize(scores: &[f64], cutoff: f64) -> Vec<bool> {
    scores.iter().map(|&s| s >= cutoff).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_labels(y_true: &[bool], y_pred: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.tp + self.fp + self.tn + self.fn_;
        (self.tp + self.tn) as f64 / n as f64
    }

    /// 0 when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Probability that a random positive outscores a random negative, ties ½.
pub fn roc_auc(y_true: &[bool], y_score: &[f64]) -> Result<Option<f64>, MetricError> {
    same_len(y_true.len(), y_score.len())?;
    let n_pos = y_true.iter().filter(|&&t| t).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let ranks = average_ranks(y_score);
    let pos_rank_sum: f64 = ranks
        .iter()
        .zip(y_true)
        .filter(|(_, &t)| t)
        .map(|(r, _)| r)
        .sum();
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(Some(u / (n_pos as f64 * n_neg as f64)))
}

/// `Σ (R_k - R_{k-1}) P_k` over distinct score thresholds, highest first.
pub fn average_precision(y_true: &[bool], y_score: &[f64]) -> Result<Option<f64>, MetricError> {
    same_len(y_true.len(), y_score.len())?;
    let n_pos = y_true.iter().filter(|&&t| t).count();
    if n_pos == 0 || n_pos == y_true.len() {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..y_true.len()).collect();
    order.sort_by(|&a, &b| y_score[b].total_cmp(&y_score[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = y_score[order[i]];
        while i < order.len() && y_score[order[i]] == s {
            if y_true[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(Some(ap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: Option<f64>,
    pub average_precision: Option<f64>,
}

pub fn classification_metrics(
    y_true: &[bool],
    y_score: &[f64],
    cutoff: f64,
) -> Result<ClassificationMetrics, MetricError> {
    same_len(y_true.len(), y_score.len())?;
    if y_true.is_empty() {
        return Err(MetricError::TooShort { need: 1, got: 0 });
    }
    let c = Confusion::from_labels(y_true, &binarize(y_score, cutoff));
    Ok(ClassificationMetrics {
        accuracy: c.accuracy(),
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        roc_auc: roc_auc(y_true, y_score)?,
        average_precision: average_precision(y_true, y_score)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub cutoffs: Vec<f64>,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        Self {
            cutoffs: vec![0.6, 0.7, 0.8, 0.9],
        }
    }
}

impl ThresholdSpec {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.cutoffs.is_empty() || self.cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricError::BadCutoffList);
        }
        if let Some(&c) = self.cutoffs.iter().find(|&&c| !(c > 0.0 && c < 1.0)) {
            return Err(MetricError::BadCutoff(c));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub cutoff: f64,
    pub metrics: ClassificationMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub spearman: Option<f64>,
    pub mse: f64,
    pub per_threshold: Vec<ThresholdMetrics>,
}

/// Full report of `predictions` against unit-interval `labels`; labels are
/// binarised at each cutoff to form the classification target.
pub fn evaluate(
    labels: &[f64],
    predictions: &[f64],
    thresholds: &ThresholdSpec,
) -> Result<MetricReport, MetricError> {
    same_len(labels.len(), predictions.len())?;
    let spearman = match spearman(labels, predictions) {
        Ok(v) => Some(v),
        Err(MetricError::Undefined(_) | MetricError::TooShort { .. }) => None,
        Err(e) => return Err(e),
    };
    let mse = mse(labels, predictions)?;
    let per_threshold = thresholds
        .cutoffs
        .iter()
        .map(|&cutoff| {
            let truth = binarize(labels, cutoff);
            classification_metrics(&truth, predictions, cutoff)
                .map(|metrics| ThresholdMetrics { cutoff, metrics })
        })
        .collect::<Result<_, _>>()?;
    Ok(MetricReport {
        spearman,
        mse,
        per_threshold,
    })
}
