//! Multi-loss ensemble learning for sgRNA on-target efficacy prediction.
//!
//! The pipeline trains each learner family (random forest, linear model,
//! gradient boosting) once per training loss, averages the per-loss models
//! into "refined" predictors, and combines everything with a linear
//! stacked-generalization meta-learner fit on out-of-fold predictions.
//!
//! Module map:
//!
//! - [`encoding`]: 23-nt NGG sequence validation and one-hot features
//! - [`dataio`]: delimited-text datasets, score normalization, seeded splits
//! - [`losses`]: squared / absolute / Huber / quantile objectives
//! - [`learners`]: CART trees, forests, gradient boosting, linear models
//! - [`tuning`]: grid search under several scoring metrics and voting
//! - [`refine`]: loss-averaged models
//! - [`stacking`]: out-of-fold stacking with a ridge meta-learner
//! - [`metrics`]: Spearman, MSE and thresholded classification metrics
//! - [`harness`]: configuration, archives, training and benchmark drivers

pub mod dataio;
pub mod encoding;
mod error;
pub mod harness;
pub mod learners;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod refine;
pub mod seed;
pub mod stacking;
pub mod synthetic;
pub mod tuning;

pub use error::{Error, Result};
pub use matrix::Matrix;
