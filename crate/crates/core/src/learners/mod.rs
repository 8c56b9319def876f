//! Base regressors: trees, forests, gradient boosting and linear models,
//! each trainable under any [`LossSpec`].

mod forest;
mod gbm;
mod linear;
mod params;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::losses::LossSpec;
use crate::Matrix;

pub use forest::Forest;
pub use gbm::Gbm;
pub use linear::LinearModel;
pub use params::{Family, ForestParams, GbmParams, HyperParams, LinearParams, TreeParams};
pub use tree::{Node, RegressionTree, MIN_GAIN};
pub(crate) use linear::weighted_ridge;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("training data is empty")]
    EmptyData,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("non-finite value in training data")]
    NonFinite,
    #[error("feature dimension mismatch: model expects {expected}, input has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0}")]
    Singular(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("{loss} constituent: {source}")]
    Loss {
        loss: String,
        #[source]
        source: Box<LearnError>,
    },
}

/// Anything that maps a feature matrix to one raw prediction per row.
pub trait Predictor {
    fn n_features(&self) -> usize;

    fn predict_row(&self, row: &[f64]) -> f64;

    fn predict(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        check_dim(self.n_features(), x)?;
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }
}

pub(crate) fn check_dim(expected: usize, x: &Matrix) -> Result<(), LearnError> {
    if x.cols() != expected {
        return Err(LearnError::Dimension {
            expected,
            got: x.cols(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedState {
    Tree(RegressionTree),
    Forest(Forest),
    Gbm(Gbm),
    Linear(LinearModel),
}

/// A trained regressor together with everything needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModel {
    pub loss: LossSpec,
    pub params: HyperParams,
    pub train_seed: u64,
    pub n_features: usize,
    pub state: FittedState,
}

impl BaseModel {
    pub fn family(&self) -> Family {
        self.params.family()
    }
}

impl Predictor for BaseModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.state {
            FittedState::Tree(t) => t.predict_row(row),
            FittedState::Forest(f) => f.predict_row(row),
            FittedState::Gbm(g) => g.predict_row(row),
            FittedState::Linear(l) => l.predict_row(row),
        }
    }
}

fn check_training(x: &Matrix, y: &[f64], loss: LossSpec) -> Result<(), LearnError> {
    if x.rows() == 0 || y.is_empty() {
        return Err(LearnError::EmptyData);
    }
    if x.rows() != y.len() {
        return Err(LearnError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if x.as_slice().iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite);
    }
    loss.validate()
        .map_err(|e| LearnError::InvalidParams(e.to_string()))
}

pub fn fit_tree(
    x: &Matrix,
    y: &[f64],
    params: &TreeParams,
    loss: LossSpec,
    seed: u64,
) -> Result<BaseModel, LearnError> {
    check_training(x, y, loss)?;
    params.validate()?;
    let tree = tree::fit_regression_tree(x, y, (0..x.rows()).collect(), *params, loss, None);
    Ok(BaseModel {
        loss,
        params: HyperParams::Tree(*params),
        train_seed: seed,
        n_features: x.cols(),
        state: FittedState::Tree(tree),
    })
}

pub fn fit_forest(
    x: &Matrix,
    y: &[f64],
    params: &ForestParams,
    loss: LossSpec,
    seed: u64,
) -> Result<BaseModel, LearnError> {
    check_training(x, y, loss)?;
    let hp = HyperParams::Forest(*params);
    hp.validate()?;
    Ok(BaseModel {
        loss,
        params: hp,
        train_seed: seed,
        n_features: x.cols(),
        state: FittedState::Forest(forest::fit(x, y, params, loss, seed)),
    })
}

pub fn fit_gbm(
    x: &Matrix,
    y: &[f64],
    params: &GbmParams,
    loss: LossSpec,
    seed: u64,
) -> Result<BaseModel, LearnError> {
    check_training(x, y, loss)?;
    let hp = HyperParams::Gbm(*params);
    hp.validate()?;
    Ok(BaseModel {
        loss,
        params: hp,
        train_seed: seed,
        n_features: x.cols(),
        state: FittedState::Gbm(gbm::fit(x, y, params, loss)),
    })
}

pub fn fit_linear(
    x: &Matrix,
    y: &[f64],
    loss: LossSpec,
    params: &LinearParams,
) -> Result<BaseModel, LearnError> {
    check_training(x, y, loss)?;
    let hp = HyperParams::Linear(*params);
    hp.validate()?;
    Ok(BaseModel {
        loss,
        params: hp,
        train_seed: 0,
        n_features: x.cols(),
        state: FittedState::Linear(linear::fit(x, y, loss, params)?),
    })
}

/// Dispatches on the parameter family.
pub fn fit(
    params: &HyperParams,
    x: &Matrix,
    y: &[f64],
    loss: LossSpec,
    seed: u64,
) -> Result<BaseModel, LearnError> {
    match params {
        HyperParams::Tree(p) => fit_tree(x, y, p, loss, seed),
        HyperParams::Forest(p) => fit_forest(x, y, p, loss, seed),
        HyperParams::Gbm(p) => fit_gbm(x, y, p, loss, seed),
        HyperParams::Linear(p) => fit_linear(x, y, loss, p),
    }
}

pub fn predict(model: &BaseModel, x: &Matrix) -> Result<Vec<f64>, LearnError> {
    model.predict(x)
}
