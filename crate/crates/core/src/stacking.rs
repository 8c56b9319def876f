//! Two-tier stacking: base models produce out-of-fold predictions, and a
//! ridge meta-learner with an unpenalised intercept combines them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{Family, HyperParams, LearnError, Predictor};
use crate::losses::LossSpec;
use crate::refine::{fit_refined, RefinedModel};
use crate::seed::{self, Stream};
use crate::tuning::{fold_assignment, fold_rows, TuneError, VoteRule, VotedModel};
use crate::Matrix;

pub const DEFAULT_META_LAMBDA: f64 = 1e-6;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StackError {
    #[error("config: {0}")]
    Config(String),
    #[error("base {name}: {source}")]
    Base {
        name: String,
        #[source]
        source: TuneError,
    },
    #[error("meta-learner: {0}")]
    Meta(LearnError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// What to train for one base column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpec {
    /// Per-metric winners for a single loss, combined by voting.
    Voted {
        name: String,
        family: Family,
        loss: LossSpec,
        params: Vec<HyperParams>,
    },
    /// One voted slot per loss, averaged.
    Refined {
        name: String,
        family: Family,
        loss_set: Vec<LossSpec>,
        params_per_loss: Vec<Vec<HyperParams>>,
    },
}

impl BaseSpec {
    pub fn name(&self) -> &str {
        match self {
            BaseSpec::Voted { name, .. } | BaseSpec::Refined { name, .. } => name,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            BaseSpec::Voted { family, .. } | BaseSpec::Refined { family, .. } => *family,
        }
    }

    fn all_params(&self) -> Vec<&HyperParams> {
        match self {
            BaseSpec::Voted { params, .. } => params.iter().collect(),
            BaseSpec::Refined { params_per_loss, .. } => params_per_loss.iter().flatten().collect(),
        }
    }

    pub fn min_train_samples(&self, n_features: usize) -> usize {
        self.all_params()
            .iter()
            .map(|p| p.min_train_samples(n_features))
            .max()
            .unwrap_or(1)
    }

    pub fn fit(&self, x: &Matrix, y: &[f64], rule: VoteRule, seed: u64) -> Result<FittedBase, StackError> {
        let r = match self {
            BaseSpec::Voted { loss, params, family, .. } => {
                if let Some(p) = params.iter().find(|p| p.family() != *family) {
                    Err(TuneError::Config(format!("{family} base given {} parameters", p.family())))
                } else {
                    VotedModel::fit(params, x, y, *loss, rule, seed).map(FittedBase::Voted)
                }
            }
            BaseSpec::Refined {
                family,
                loss_set,
                params_per_loss,
                ..
            } => fit_refined(*family, x, y, loss_set, params_per_loss, rule, seed).map(FittedBase::Refined),
        };
        r.map_err(|source| StackError::Base {
            name: self.name().to_string(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedBase {
    Voted(VotedModel),
    Refined(RefinedModel),
}

impl Predictor for FittedBase {
    fn n_features(&self) -> usize {
        match self {
            FittedBase::Voted(v) => v.n_features(),
            FittedBase::Refined(r) => r.n_features(),
        }
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            FittedBase::Voted(v) => v.predict_row(row),
            FittedBase::Refined(r) => r.predict_row(row),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackOptions {
    pub meta_lambda: f64,
    /// Refit with negative weights pinned to zero until none remain.
    pub nonnegative: bool,
    /// Feed the raw features to the meta-learner next to the base predictions.
    pub append_raw_features: bool,
    pub vote: VoteRule,
}

impl Default for StackOptions {
    fn default() -> Self {
        Self {
            meta_lambda: DEFAULT_META_LAMBDA,
            nonnegative: false,
            append_raw_features: false,
            vote: VoteRule::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedEnsemble {
    pub base_specs: Vec<BaseSpec>,
    pub folds: usize,
    pub seed: u64,
    pub options: StackOptions,
    /// Fold index of every training row, for leakage audits.
    pub fold_of_row: Vec<usize>,
    /// Out-of-fold meta-features, `n x N`.
    pub oof: Matrix,
    pub fitted_bases: Vec<FittedBase>,
    /// One weight per meta column: N bases, then raw features if appended.
    pub meta_weights: Vec<f64>,
    pub meta_intercept: f64,
}

/// Seed of the model for `base` trained without `fold`.
pub fn fold_model_seed(seed: u64, fold: usize, base: usize) -> u64 {
    seed::derive(seed::derive(seed, Stream::StackFoldModel, fold as u64), Stream::StackFoldModel, base as u64)
}

pub fn full_model_seed(seed: u64, base: usize) -> u64 {
    seed::derive(seed, Stream::StackFullModel, base as u64)
}

pub fn stack_folds(n: usize, k: usize, seed: u64) -> Vec<usize> {
    fold_assignment(n, k, seed::derive(seed, Stream::StackFolds, 0))
}

pub fn fit_stacked(
    base_specs: &[BaseSpec],
    x: &Matrix,
    y: &[f64],
    k: usize,
    seed: u64,
    options: StackOptions,
) -> Result<StackedEnsemble, StackError> {
    let n = x.rows();
    if base_specs.is_empty() {
        return Err(StackError::Config("no base models".into()));
    }
    if n != y.len() {
        return Err(LearnError::LengthMismatch { rows: n, labels: y.len() }.into());
    }
    if k < 2 || k > n {
        return Err(StackError::Config(format!("{k} stacking folds over {n} rows")));
    }
    if !(options.meta_lambda >= 0.0 && options.meta_lambda.is_finite()) {
        return Err(StackError::Config(format!("meta_lambda {} must be >= 0", options.meta_lambda)));
    }
    let fold_of_row = stack_folds(n, k, seed);
    let smallest_train = (0..k)
        .map(|f| fold_of_row.iter().filter(|&&g| g != f).count())
        .min()
        .unwrap();
    for spec in base_specs {
        let need = spec.min_train_samples(x.cols());
        if smallest_train < need {
            return Err(StackError::Config(format!(
                "base {} needs at least {need} training rows but a stacking fold leaves {smallest_train}",
                spec.name()
            )));
        }
    }

    let nb = base_specs.len();
    let jobs: Vec<(usize, usize)> = (0..k).flat_map(|f| (0..nb).map(move |j| (f, j))).collect();
    let fold_preds: Vec<(Vec<usize>, Vec<f64>)> = jobs
        .par_iter()
        .map(|&(f, j)| {
            let (train, test) = fold_rows(&fold_of_row, f);
            let model = base_specs[j].fit(
                &x.select_rows(&train),
                &crate::matrix::select(y, &train),
                options.vote,
                fold_model_seed(seed, f, j),
            )?;
            let p = model.predict(&x.select_rows(&test))?;
            Ok((test, p))
        })
        .collect::<Result<_, StackError>>()?;
    let mut oof = Matrix::zeros(n, nb);
    for (&(_, j), (rows, preds)) in jobs.iter().zip(&fold_preds) {
        for (&i, &p) in rows.iter().zip(preds) {
            oof.set(i, j, p);
        }
    }

    let fitted_bases = base_specs
        .par_iter()
        .enumerate()
        .map(|(j, spec)| spec.fit(x, y, options.vote, full_model_seed(seed, j)))
        .collect::<Result<Vec<_>, _>>()?;

    let meta_x = if options.append_raw_features { oof.hstack(x) } else { oof.clone() };
    let (meta_weights, meta_intercept) = fit_meta(&meta_x, y, options.meta_lambda, options.nonnegative, nb)?;
    Ok(StackedEnsemble {
        base_specs: base_specs.to_vec(),
        folds: k,
        seed,
        options,
        fold_of_row,
        oof,
        fitted_bases,
        meta_weights,
        meta_intercept,
    })
}

/// Ridge fit of the meta stage. With `nonnegative`, base columns (the
/// first `nb`) whose weight comes out negative are removed and the fit is
/// repeated; removed columns keep weight zero.
fn fit_meta(z: &Matrix, y: &[f64], lambda: f64, nonnegative: bool, nb: usize) -> Result<(Vec<f64>, f64), StackError> {
    let mut active: Vec<usize> = (0..z.cols()).collect();
    loop {
        let sub = column_subset(z, &active);
        let (w, b) = crate::learners::weighted_ridge(&sub, y, None, lambda).map_err(StackError::Meta)?;
        let negative: Vec<usize> = active
            .iter()
            .zip(&w)
            .filter(|(&c, &wc)| nonnegative && c < nb && wc < 0.0)
            .map(|(&c, _)| c)
            .collect();
        if negative.is_empty() {
            let mut full = vec![0.0; z.cols()];
            for (&c, &wc) in active.iter().zip(&w) {
                full[c] = wc;
            }
            return Ok((full, b));
        }
        active.retain(|c| !negative.contains(c));
    }
}

fn column_subset(z: &Matrix, cols: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(z.rows() * cols.len());
    for i in 0..z.rows() {
        let row = z.row(i);
        data.extend(cols.iter().map(|&c| row[c]));
    }
    Matrix::new(z.rows(), cols.len(), data)
}

impl StackedEnsemble {
    /// Affine meta combination of one row of base predictions (plus raw
    /// features when appended).
    pub fn combine(&self, meta_row: &[f64]) -> f64 {
        let mut s = self.meta_intercept;
        for (w, v) in self.meta_weights.iter().zip(meta_row) {
            s += w * v;
        }
        s
    }

    pub fn base_predictions(&self, x: &Matrix) -> Result<Matrix, LearnError> {
        let cols = self
            .fitted_bases
            .iter()
            .map(|b| b.predict(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_columns(&cols))
    }
}

impl Predictor for StackedEnsemble {
    fn n_features(&self) -> usize {
        self.fitted_bases[0].n_features()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut meta: Vec<f64> = self.fitted_bases.iter().map(|b| b.predict_row(row)).collect();
        if self.options.append_raw_features {
            meta.extend_from_slice(row);
        }
        self.combine(&meta)
    }
}

/// Raw (unclipped) stacked predictions.
pub fn predict_stacked(se: &StackedEnsemble, x: &Matrix) -> Result<Vec<f64>, LearnError> {
    se.predict(x)
}
