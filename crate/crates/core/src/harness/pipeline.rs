//! Tune every (family, loss) lane, build the roster's bases from the
//! winners, and stack them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::HarnessError;
use crate::learners::{Family, Predictor};
use crate::losses::LossSpec;
use crate::seed::{self, Stream};
use crate::stacking::{fit_stacked, BaseSpec, StackedEnsemble};
use crate::tuning::{grid_search, TuneResult, TuneSpec};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub tuning: Vec<TuneResult>,
    pub ensemble: StackedEnsemble,
}

impl TrainedPipeline {
    /// Report labels of the stacked bases, in roster order.
    pub fn method_labels(&self) -> Vec<String> {
        self.ensemble.base_specs.iter().map(|s| s.name().to_string()).collect()
    }
}

/// `(family, loss)` pairs that need tuning, in a fixed order.
pub fn lanes(cfg: &PipelineConfig) -> Vec<(Family, LossSpec)> {
    let mut out = Vec::new();
    for &family in cfg.grids.keys() {
        let entries: Vec<_> = cfg.roster.iter().filter(|e| e.family == family).collect();
        let mut losses = Vec::new();
        if entries.iter().any(|e| e.averaged) {
            losses.extend(cfg.loss_set.iter().copied());
        }
        if entries.iter().any(|e| !e.averaged) && !losses.contains(&cfg.primary_loss) {
            losses.push(cfg.primary_loss);
        }
        out.extend(losses.into_iter().map(|l| (family, l)));
    }
    out
}

pub fn tune_lanes(
    cfg: &PipelineConfig,
    x: &Matrix,
    y: &[f64],
    seed: u64,
) -> Result<Vec<TuneResult>, HarnessError> {
    // every lane shares one fold assignment
    let tune_seed = seed::derive(seed, Stream::Tuning, 0);
    let results = lanes(cfg)
        .par_iter()
        .map(|&(family, loss)| {
            let spec = TuneSpec {
                grid: cfg.grids[&family].clone(),
                metrics: cfg.metrics.clone(),
                cv_folds: cfg.tune_folds,
                seed: tune_seed,
            };
            grid_search(family, loss, x, y, &spec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(results)
}

pub fn base_specs(cfg: &PipelineConfig, tuning: &[TuneResult]) -> Vec<BaseSpec> {
    let winners = |family: Family, loss: LossSpec| {
        tuning
            .iter()
            .find(|t| t.family == family && t.loss == loss)
            .expect("lane was tuned")
            .distinct_winner_params()
    };
    cfg.roster
        .iter()
        .map(|e| {
            if e.averaged {
                BaseSpec::Refined {
                    name: e.label().to_string(),
                    family: e.family,
                    loss_set: cfg.loss_set.clone(),
                    params_per_loss: cfg.loss_set.iter().map(|&l| winners(e.family, l)).collect(),
                }
            } else {
                BaseSpec::Voted {
                    name: e.label().to_string(),
                    family: e.family,
                    loss: cfg.primary_loss,
                    params: winners(e.family, cfg.primary_loss),
                }
            }
        })
        .collect()
}

pub fn train_pipeline(
    cfg: &PipelineConfig,
    x: &Matrix,
    y: &[f64],
    seed: u64,
) -> Result<TrainedPipeline, HarnessError> {
    let tuning = tune_lanes(cfg, x, y, seed)?;
    let specs = base_specs(cfg, &tuning);
    let ensemble = fit_stacked(
        &specs,
        x,
        y,
        cfg.stack_folds,
        seed::derive(seed, Stream::Pipeline, 0),
        cfg.stack_options,
    )?;
    Ok(TrainedPipeline { tuning, ensemble })
}

/// Raw predictions of the stacked model followed by each base, per row.
pub fn predict_all(p: &TrainedPipeline, x: &Matrix) -> Result<Vec<Vec<f64>>, HarnessError> {
    let mut out = vec![p.ensemble.predict(x)?];
    for b in &p.ensemble.fitted_bases {
        out.push(b.predict(x)?);
    }
    Ok(out)
}

/// Delimited score table: one row per (lane, cell, metric).
pub fn tuning_table(results: &[TuneResult]) -> String {
    let mut s = String::from("family\tloss\tcell\tparams\tmetric\tcv_score\twinner\n");
    for r in results {
        for (c, params) in r.grid.iter().enumerate() {
            for (m, metric) in r.metrics.iter().enumerate() {
                let score = r.scores[c][m].map_or_else(|| "NA".to_string(), |v| v.to_string());
                let won = r.winners[m].cell == c;
                s.push_str(&format!(
                    "{}\t{}\t{c}\t{params}\t{metric}\t{score}\t{won}\n",
                    r.family, r.loss
                ));
            }
        }
    }
    s
}
