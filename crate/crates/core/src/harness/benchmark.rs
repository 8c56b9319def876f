//! Repeated random-split benchmark.
//!
//! Each repeat splits the data, trains the full pipeline on the training
//! side and scores the held-out side for the stacked model, every roster
//! method and every baseline column. Model scores are clipped to `[0, 1]`
//! before evaluation, as they would be when emitted. The mean table
//! averages each entry over the repeats where it is defined and prints
//! `NA` when it never is.

use rayon::prelude::*;
use serde::Serialize;

use super::config::Experiment;
use super::pipeline::{predict_all, train_pipeline};
use super::{clip_score, HarnessError};
use crate::dataio::{split_indices, Dataset};
use crate::metrics::{evaluate, MetricReport};

pub const STACKED_LABEL: &str = "OURS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub methods: Vec<String>,
    pub cutoffs: Vec<f64>,
    /// `repeats[r][method]`.
    pub repeats: Vec<Vec<MetricReport>>,
}

/// `(section, metric)` labels of the table rows, in print order.
pub fn row_labels(cutoffs: &[f64]) -> Vec<(String, &'static str)> {
    let mut rows = vec![
        ("regression".to_string(), "spearman_score"),
        ("regression".to_string(), "MSE_score"),
    ];
    for c in cutoffs {
        for m in [
            "accuracy_score",
            "roc_auc_score",
            "precision_score",
            "recall_score",
            "f1_score",
            "average_precision_score",
        ] {
            rows.push((format!("threshold={c}"), m));
        }
    }
    rows
}

fn row_values(r: &MetricReport) -> Vec<Option<f64>> {
    let mut v = vec![r.spearman, Some(r.mse)];
    for t in &r.per_threshold {
        let m = &t.metrics;
        v.extend([
            Some(m.accuracy),
            m.roc_auc,
            Some(m.precision),
            Some(m.recall),
            Some(m.f1),
            m.average_precision,
        ]);
    }
    v
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl BenchmarkReport {
    /// `table[row][method]` for one repeat.
    pub fn repeat_table(&self, r: usize) -> Vec<Vec<Option<f64>>> {
        let cols: Vec<Vec<Option<f64>>> = self.repeats[r].iter().map(row_values).collect();
        (0..cols[0].len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
    }

    pub fn mean_table(&self) -> Vec<Vec<Option<f64>>> {
        let tables: Vec<_> = (0..self.repeats.len()).map(|r| self.repeat_table(r)).collect();
        let (rows, cols) = (tables[0].len(), self.methods.len());
        (0..rows)
            .map(|i| {
                (0..cols)
                    .map(|j| {
                        let vals: Vec<f64> = tables.iter().filter_map(|t| t[i][j]).collect();
                        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn per_repeat_tsv(&self) -> String {
        let mut s = format!("repeat\tsection\tmetric\t{}\n", self.methods.join("\t"));
        let labels = row_labels(&self.cutoffs);
        for r in 0..self.repeats.len() {
            for ((section, metric), vals) in labels.iter().zip(self.repeat_table(r)) {
                let cells: Vec<String> = vals.into_iter().map(fmt).collect();
                s.push_str(&format!("{r}\t{section}\t{metric}\t{}\n", cells.join("\t")));
            }
        }
        s
    }

    pub fn mean_tsv(&self) -> String {
        let mut s = format!("section\tmetric\t{}\n", self.methods.join("\t"));
        for ((section, metric), vals) in row_labels(&self.cutoffs).iter().zip(self.mean_table()) {
            let cells: Vec<String> = vals.into_iter().map(fmt).collect();
            s.push_str(&format!("{section}\t{metric}\t{}\n", cells.join("\t")));
        }
        s
    }

    /// Mean value of one `(section, metric)` row for one method.
    pub fn mean_value(&self, section: &str, metric: &str, method: &str) -> Option<f64> {
        let i = row_labels(&self.cutoffs)
            .iter()
            .position(|(s, m)| s == section && *m == metric)?;
        let j = self.methods.iter().position(|m| m == method)?;
        self.mean_table()[i][j]
    }
}

pub const MIN_BENCHMARK_ROWS: usize = 10;

pub fn run_benchmark(exp: &Experiment, ds: &Dataset) -> Result<BenchmarkReport, HarnessError> {
    let n = ds.len();
    if n < MIN_BENCHMARK_ROWS {
        return Err(HarnessError::Config {
            path: None,
            message: format!("benchmark needs at least {MIN_BENCHMARK_ROWS} rows, dataset has {n}"),
        });
    }
    exp.split.validate_for(n)?;
    let x = ds.features();
    let y = ds.labels();
    let baselines: Vec<(String, Vec<f64>)> = exp
        .schema
        .baseline_columns
        .iter()
        .map(|b| {
            ds.baseline(&b.name)
                .map(|v| (b.name.clone(), v))
                .ok_or_else(|| HarnessError::Config {
                    path: None,
                    message: format!("baseline column {:?} missing from some rows", b.name),
                })
        })
        .collect::<Result<_, _>>()?;

    let mut methods = vec![STACKED_LABEL.to_string()];
    methods.extend(exp.pipeline.roster.iter().map(|e| e.label().to_string()));
    methods.extend(baselines.iter().map(|(name, _)| name.clone()));

    let repeats = (0..exp.split.repeats)
        .into_par_iter()
        .map(|r| {
            let (train, test) = split_indices(n, &exp.split, r)?;
            let xt = x.select_rows(&train);
            let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let pipeline = train_pipeline(&exp.pipeline, &xt, &yt, exp.split.repeat_seed(r))?;
            let xs = x.select_rows(&test);
            let ys: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            let mut reports = Vec::with_capacity(methods.len());
            for preds in predict_all(&pipeline, &xs)? {
                let clipped: Vec<f64> = preds.into_iter().map(clip_score).collect();
                reports.push(evaluate(&ys, &clipped, &exp.thresholds)?);
            }
            for (_, col) in &baselines {
                let b: Vec<f64> = test.iter().map(|&i| col[i]).collect();
                reports.push(evaluate(&ys, &b, &exp.thresholds)?);
            }
            Ok(reports)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    Ok(BenchmarkReport {
        methods,
        cutoffs: exp.thresholds.cutoffs.clone(),
        repeats,
    })
}
