//! Grid search under several scoring metrics, and voting over the
//! per-metric winners.
//!
//! Every grid cell is scored with the same seeded k-fold partition. A
//! cell's score under a metric is the mean of that metric over the held-out
//! folds; the winner per metric is the highest-scoring cell, earliest grid
//! position on ties. Cells whose metric is undefined on some fold (e.g.
//! constant predictions under Spearman) get no score for that metric and
//! can only win if no cell has one.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{self, BaseModel, Family, HyperParams, LearnError, Predictor};
use crate::losses::LossSpec;
use crate::metrics;
use crate::seed::{self, Stream};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuneError {
    #[error("config: {0}")]
    Config(String),
    #[error("grid cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: LearnError,
    },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("cannot vote over an empty winner list")]
    NoWinners,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScoringMetric {
    Spearman,
    NegMse,
    /// F1 after binarising labels and predictions at the cutoff.
    F1AtThreshold(f64),
}

impl ScoringMetric {
    /// Higher is better; `None` when undefined on this fold.
    pub fn score(&self, labels: &[f64], predictions: &[f64]) -> Option<f64> {
        match *self {
            ScoringMetric::Spearman => metrics::spearman(labels, predictions).ok(),
            ScoringMetric::NegMse => metrics::mse(labels, predictions).ok().map(|v| -v),
            ScoringMetric::F1AtThreshold(t) => {
                let truth = metrics::binarize(labels, t);
                metrics::classification_metrics(&truth, predictions, t)
                    .ok()
                    .map(|m| m.f1)
            }
        }
    }
}

impl fmt::Display for ScoringMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoringMetric::Spearman => f.write_str("spearman"),
            ScoringMetric::NegMse => f.write_str("neg_mse"),
            ScoringMetric::F1AtThreshold(t) => write!(f, "f1@{t}"),
        }
    }
}

impl FromStr for ScoringMetric {
    type Err = TuneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spearman" => Ok(Self::Spearman),
            "neg_mse" => Ok(Self::NegMse),
            _ => {
                let t = s
                    .strip_prefix("f1@")
                    .and_then(|t| t.parse::<f64>().ok())
                    .filter(|t| *t > 0.0 && *t < 1.0)
                    .ok_or_else(|| TuneError::Config(format!("unknown scoring metric {s:?}")))?;
                Ok(Self::F1AtThreshold(t))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSpec {
    pub grid: Vec<HyperParams>,
    pub metrics: Vec<ScoringMetric>,
    pub cv_folds: usize,
    pub seed: u64,
}

impl TuneSpec {
    pub fn validate(&self, family: Family, n: usize) -> Result<(), TuneError> {
        if self.grid.is_empty() {
            return Err(TuneError::Config(format!("grid for {family} is empty")));
        }
        if let Some(p) = self.grid.iter().find(|p| p.family() != family) {
            return Err(TuneError::Config(format!(
                "grid for {family} contains {} parameters",
                p.family()
            )));
        }
        for p in &self.grid {
            p.validate()?;
        }
        if self.metrics.is_empty() {
            return Err(TuneError::Config("no scoring metrics".into()));
        }
        if self.cv_folds < 2 {
            return Err(TuneError::Config("cv_folds must be at least 2".into()));
        }
        if self.cv_folds > n {
            return Err(TuneError::Config(format!(
                "{} folds over {n} rows leaves a fold with no samples",
                self.cv_folds
            )));
        }
        Ok(())
    }
}

/// Fold index of every row: seeded shuffle, then round-robin assignment.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold[row] = pos % k;
    }
    fold
}

/// `(train rows, held-out rows)` for one fold, both ascending.
pub fn fold_rows(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winner {
    pub metric: ScoringMetric,
    pub cell: usize,
    pub params: HyperParams,
    pub cv_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub family: Family,
    pub loss: LossSpec,
    pub grid: Vec<HyperParams>,
    pub metrics: Vec<ScoringMetric>,
    /// `scores[cell][metric]`.
    pub scores: Vec<Vec<Option<f64>>>,
    pub folds: Vec<usize>,
    pub winners: Vec<Winner>,
}

impl TuneResult {
    /// Winning parameters in metric order, with repeats removed.
    pub fn distinct_winner_params(&self) -> Vec<HyperParams> {
        let mut cells: Vec<usize> = Vec::new();
        for w in &self.winners {
            if !cells.contains(&w.cell) {
                cells.push(w.cell);
            }
        }
        cells.into_iter().map(|c| self.grid[c]).collect()
    }
}

/// Index of the best cell per metric column. Missing scores rank below
/// every present score; ties keep the earliest cell.
pub fn select_winners(scores: &[Vec<Option<f64>>], n_metrics: usize) -> Vec<usize> {
    (0..n_metrics)
        .map(|m| {
            let mut best = 0;
            for c in 1..scores.len() {
                let better = match (scores[c][m], scores[best][m]) {
                    (Some(a), Some(b)) => a > b,
                    (Some(_), None) => true,
                    _ => false,
                };
                if better {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Out-of-fold predictions of one configuration under a fixed fold assignment.
pub(crate) fn cv_scores(
    params: &HyperParams,
    loss: LossSpec,
    x: &Matrix,
    y: &[f64],
    folds: &[usize],
    k: usize,
    metrics: &[ScoringMetric],
    seed: u64,
) -> Result<Vec<Option<f64>>, LearnError> {
    let mut per_metric: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(k); metrics.len()];
    for fold in 0..k {
        let (train, test) = fold_rows(folds, fold);
        let xt = x.select_rows(&train);
        let yt = crate::matrix::select(y, &train);
        let model = learners::fit(
            params,
            &xt,
            &yt,
            loss,
            seed::derive(seed, Stream::CvModel, fold as u64),
        )?;
        let pred = model.predict(&x.select_rows(&test))?;
        let truth = crate::matrix::select(y, &test);
        for (m, metric) in metrics.iter().enumerate() {
            per_metric[m].push(metric.score(&truth, &pred));
        }
    }
    Ok(per_metric
        .into_iter()
        .map(|scores| {
            let vals: Option<Vec<f64>> = scores.into_iter().collect();
            vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect())
}

pub fn grid_search(
    family: Family,
    loss: LossSpec,
    x: &Matrix,
    y: &[f64],
    spec: &TuneSpec,
) -> Result<TuneResult, TuneError> {
    spec.validate(family, x.rows())?;
    if x.rows() != y.len() {
        return Err(LearnError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        }
        .into());
    }
    let folds = fold_assignment(x.rows(), spec.cv_folds, seed::derive(spec.seed, Stream::CvFolds, 0));
    let scores: Vec<Vec<Option<f64>>> = spec
        .grid
        .par_iter()
        .enumerate()
        .map(|(cell, params)| {
            cv_scores(params, loss, x, y, &folds, spec.cv_folds, &spec.metrics, spec.seed)
                .map_err(|source| TuneError::Cell { cell, source })
        })
        .collect::<Result<_, _>>()?;
    let winners = select_winners(&scores, spec.metrics.len())
        .into_iter()
        .zip(&spec.metrics)
        .map(|(cell, &metric)| Winner {
            metric,
            cell,
            params: spec.grid[cell],
            cv_score: scores[cell][spec.metrics.iter().position(|m| *m == metric).unwrap()],
        })
        .collect();
    Ok(TuneResult {
        family,
        loss,
        grid: spec.grid.clone(),
        metrics: spec.metrics.clone(),
        scores,
        folds,
        winners,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoteRule {
    #[default]
    Mean,
    Median,
}

fn combine(values: &mut [f64], rule: VoteRule) -> f64 {
    match rule {
        VoteRule::Mean => values.iter().sum::<f64>() / values.len() as f64,
        VoteRule::Median => {
            values.sort_by(f64::total_cmp);
            let n = values.len();
            if n % 2 == 1 {
                values[n / 2]
            } else {
                0.5 * (values[n / 2 - 1] + values[n / 2])
            }
        }
    }
}

/// Combines per-metric winners by averaging (or taking the median of) their predictions.
pub fn vote_predict(
    winners: &[&dyn Predictor],
    x: &Matrix,
    rule: VoteRule,
) -> Result<Vec<f64>, TuneError> {
    if winners.is_empty() {
        return Err(TuneError::NoWinners);
    }
    let preds = winners
        .iter()
        .map(|w| w.predict(x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut buf = vec![0.0; winners.len()];
    Ok((0..x.rows())
        .map(|i| {
            for (b, p) in buf.iter_mut().zip(&preds) {
                *b = p[i];
            }
            combine(&mut buf, rule)
        })
        .collect())
}

/// Models trained with each winning configuration of one (family, loss)
/// lane; predicts by voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotedModel {
    pub rule: VoteRule,
    pub members: Vec<BaseModel>,
}

impl VotedModel {
    pub fn fit(
        params: &[HyperParams],
        x: &Matrix,
        y: &[f64],
        loss: LossSpec,
        rule: VoteRule,
        seed: u64,
    ) -> Result<Self, TuneError> {
        if params.is_empty() {
            return Err(TuneError::NoWinners);
        }
        let members = params
            .iter()
            .enumerate()
            .map(|(i, p)| learners::fit(p, x, y, loss, seed::derive(seed, Stream::VoteMember, i as u64)))
            .collect::<Result<_, _>>()?;
        Ok(Self { rule, members })
    }

    pub fn loss(&self) -> LossSpec {
        self.members[0].loss
    }

    pub fn family(&self) -> Family {
        self.members[0].family()
    }
}

impl Predictor for VotedModel {
    fn n_features(&self) -> usize {
        self.members[0].n_features
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        if self.members.len() == 1 {
            return self.members[0].predict_row(row);
        }
        let mut v: Vec<f64> = self.members.iter().map(|m| m.predict_row(row)).collect();
        combine(&mut v, self.rule)
    }
}
