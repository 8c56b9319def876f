//! TOML experiment configuration.
//!
//! ```toml
//! [dataset]
//! sequence_column = "sequence"
//! label_column = "efficacy"
//! label_scale = "unit"
//!
//! [losses]
//! kinds = ["squared", "absolute", "huber", "quantile"]
//!
//! [grid.forest]
//! max_depth = [6, 8]
//! n_trees = [50]
//!
//! [stacking]
//! roster = ["forest", "avg_forest"]
//! ```
//!
//! Each `[grid.<family>]` key lists candidate values for one
//! hyperparameter; the grid is their cartesian product, with the last key
//! (in key order) varying fastest. Keys left out keep the family default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::dataio::{DatasetSchema, SplitPlan};
use crate::learners::{Family, HyperParams};
use crate::losses::{LossSpec, DEFAULT_HUBER_DELTA, DEFAULT_QUANTILE_TAU};
use crate::metrics::ThresholdSpec;
use crate::stacking::{StackOptions, DEFAULT_FOLDS, DEFAULT_META_LAMBDA};
use crate::tuning::{ScoringMetric, VoteRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub kinds: Vec<String>,
    pub huber_delta: f64,
    pub quantile_tau: f64,
    /// Loss used by the single-loss roster entries.
    pub primary: String,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            kinds: ["squared", "absolute", "huber", "quantile"].map(String::from).to_vec(),
            huber_delta: DEFAULT_HUBER_DELTA,
            quantile_tau: DEFAULT_QUANTILE_TAU,
            primary: "squared".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningSection {
    pub metrics: Vec<String>,
    pub folds: usize,
    pub vote: VoteRule,
}

impl Default for TuningSection {
    fn default() -> Self {
        Self {
            metrics: vec!["spearman".into(), "neg_mse".into()],
            folds: 3,
            vote: VoteRule::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackingSection {
    pub folds: usize,
    pub roster: Vec<String>,
    pub meta_lambda: f64,
    pub nonnegative: bool,
    pub append_raw_features: bool,
}

impl Default for StackingSection {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            roster: ["forest", "linear", "gbm", "avg_forest", "avg_linear", "avg_gbm"]
                .map(String::from)
                .to_vec(),
            meta_lambda: DEFAULT_META_LAMBDA,
            nonnegative: false,
            append_raw_features: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub train_fraction: f64,
    pub repeats: usize,
    pub master_seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let p = SplitPlan::default();
        Self {
            train_fraction: p.train_fraction,
            repeats: p.repeats,
            master_seed: p.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSchema,
    #[serde(default)]
    pub losses: LossSection,
    #[serde(default)]
    pub tuning: TuningSection,
    #[serde(default)]
    pub grid: BTreeMap<String, toml::Table>,
    #[serde(default)]
    pub stacking: StackingSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub thresholds: ThresholdSpec,
    #[serde(default)]
    pub output: OutputSection,
}

/// One stacking base: a family, either tuned on the primary loss alone or
/// averaged over the whole loss set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub family: Family,
    pub averaged: bool,
}

impl RosterEntry {
    pub fn parse(s: &str) -> Option<Self> {
        let (averaged, name) = match s.strip_prefix("avg_") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        Family::parse(name).map(|family| Self { family, averaged })
    }

    pub fn key(&self) -> String {
        if self.averaged {
            format!("avg_{}", self.family)
        } else {
            self.family.to_string()
        }
    }

    /// Column label in reports.
    pub fn label(&self) -> &'static str {
        if self.averaged {
            self.family.averaged_label()
        } else {
            self.family.method_label()
        }
    }
}

/// Everything the training pipeline needs, validated and typed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub loss_set: Vec<LossSpec>,
    pub primary_loss: LossSpec,
    pub metrics: Vec<ScoringMetric>,
    pub tune_folds: usize,
    pub vote: VoteRule,
    pub grids: BTreeMap<Family, Vec<HyperParams>>,
    pub roster: Vec<RosterEntry>,
    pub stack_folds: usize,
    pub stack_options: StackOptions,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub schema: DatasetSchema,
    pub pipeline: PipelineConfig,
    pub split: SplitPlan,
    pub thresholds: ThresholdSpec,
    pub output_dir: Option<PathBuf>,
}

impl Experiment {
    /// SHA-256 of the canonical JSON form of the resolved experiment.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("experiment serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn cfg(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        path: None,
        message: msg.into(),
    }
}

pub fn expand_grid(family: Family, table: &toml::Table) -> Result<Vec<HyperParams>, HarnessError> {
    let serde_json::Value::Object(defaults) =
        serde_json::to_value(family.default_params()).expect("params serialize")
    else {
        unreachable!("params serialize to an object")
    };
    let mut axes: Vec<(String, Vec<serde_json::Value>)> = Vec::new();
    for (key, value) in table {
        if key == "family" || !defaults.contains_key(key) {
            return Err(cfg(format!("[grid.{family}] has unknown key {key:?}")));
        }
        let values = match value {
            toml::Value::Array(a) => a.clone(),
            other => vec![other.clone()],
        };
        if values.is_empty() {
            return Err(cfg(format!("[grid.{family}] key {key:?} has no values")));
        }
        let values = values
            .into_iter()
            .map(|v| serde_json::to_value(v).map_err(|e| cfg(e.to_string())))
            .collect::<Result<_, _>>()?;
        axes.push((key.clone(), values));
    }
    let mut cells = vec![defaults];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(cells.len() * values.len());
        for cell in &cells {
            for v in values {
                let mut c = cell.clone();
                c.insert(key.clone(), v.clone());
                next.push(c);
            }
        }
        cells = next;
    }
    cells
        .into_iter()
        .map(|c| {
            let p: HyperParams = serde_json::from_value(serde_json::Value::Object(c))
                .map_err(|e| cfg(format!("[grid.{family}]: {e}")))?;
            p.validate().map_err(|e| cfg(format!("[grid.{family}]: {e}")))?;
            Ok(p)
        })
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| cfg(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| e.with_path(path))
    }

    pub fn resolve(&self) -> Result<Experiment, HarnessError> {
        self.dataset.validate().map_err(|e| cfg(format!("[dataset]: {e}")))?;

        let l = &self.losses;
        let parse_loss = |k: &str| {
            LossSpec::from_kind(k, l.huber_delta, l.quantile_tau).map_err(|e| cfg(format!("[losses]: {e}")))
        };
        let loss_set = l.kinds.iter().map(|k| parse_loss(k)).collect::<Result<Vec<_>, _>>()?;
        if loss_set.is_empty() {
            return Err(cfg("[losses] kinds is empty"));
        }
        let primary_loss = parse_loss(&l.primary)?;

        let metrics = self
            .tuning
            .metrics
            .iter()
            .map(|m| m.parse::<ScoringMetric>().map_err(|e| cfg(format!("[tuning]: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if metrics.is_empty() {
            return Err(cfg("[tuning] metrics is empty"));
        }
        if self.tuning.folds < 2 {
            return Err(cfg("[tuning] folds must be at least 2"));
        }

        let mut roster = Vec::new();
        for r in &self.stacking.roster {
            let e = RosterEntry::parse(r).ok_or_else(|| cfg(format!("[stacking] unknown roster entry {r:?}")))?;
            if roster.contains(&e) {
                return Err(cfg(format!("[stacking] roster lists {r:?} twice")));
            }
            roster.push(e);
        }
        if roster.is_empty() {
            return Err(cfg("[stacking] roster is empty"));
        }
        if self.stacking.folds < 2 {
            return Err(cfg("[stacking] folds must be at least 2"));
        }
        if !(self.stacking.meta_lambda >= 0.0) {
            return Err(cfg("[stacking] meta_lambda must be >= 0"));
        }

        for name in self.grid.keys() {
            if Family::parse(name).is_none() {
                return Err(cfg(format!("unknown section [grid.{name}]")));
            }
        }
        let mut grids = BTreeMap::new();
        for e in &roster {
            if grids.contains_key(&e.family) {
                continue;
            }
            let table = self.grid.get(e.family.name()).ok_or_else(|| {
                cfg(format!(
                    "missing section [grid.{}] required by roster entry {:?}",
                    e.family,
                    e.key()
                ))
            })?;
            grids.insert(e.family, expand_grid(e.family, table)?);
        }

        let split = SplitPlan {
            train_fraction: self.split.train_fraction,
            repeats: self.split.repeats,
            master_seed: self.split.master_seed,
        };
        if split.repeats < 1 {
            return Err(cfg("[split] repeats must be at least 1"));
        }
        if !(split.train_fraction > 0.0 && split.train_fraction < 1.0) {
            return Err(cfg("[split] train_fraction must lie in (0, 1)"));
        }
        self.thresholds.validate().map_err(|e| cfg(format!("[thresholds]: {e}")))?;

        Ok(Experiment {
            schema: self.dataset.clone(),
            pipeline: PipelineConfig {
                loss_set,
                primary_loss,
                metrics,
                tune_folds: self.tuning.folds,
                vote: self.tuning.vote,
                grids,
                roster,
                stack_folds: self.stacking.folds,
                stack_options: StackOptions {
                    meta_lambda: self.stacking.meta_lambda,
                    nonnegative: self.stacking.nonnegative,
                    append_raw_features: self.stacking.append_raw_features,
                    vote: self.tuning.vote,
                },
            },
            split,
            thresholds: self.thresholds.clone(),
            output_dir: self.output.dir.clone(),
        })
    }
}

/// Parses and resolves a config file, tagging errors with its path.
pub fn load_experiment(path: &Path) -> Result<Experiment, HarnessError> {
    ExperimentConfig::load(path)?
        .resolve()
        .map_err(|e| e.with_path(path))
}
