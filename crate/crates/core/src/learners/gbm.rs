//! Gradient boosting with per-leaf loss-optimal step sizes.
//!
//! Each stage fits a least-squares tree to the pseudo-residuals, replaces
//! every leaf with the loss-optimal constant of the actual residuals
//! `y - F` in that leaf, and adds the tree scaled by the learning rate.

use serde::{Deserialize, Serialize};

use super::params::GbmParams;
use super::tree::{RegressionTree, TreeBuilder};
use crate::losses::{optimal_constant, LossSpec};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbm {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl Gbm {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut f = self.base_score;
        for t in &self.trees {
            f += self.learning_rate * t.predict_row(row);
        }
        f
    }

    /// Predictions after 0, 1, ..., n_stages stages, accumulated in the
    /// same order as training.
    pub fn staged_predict(&self, x: &Matrix) -> Vec<Vec<f64>> {
        let mut current = vec![self.base_score; x.rows()];
        let mut out = Vec::with_capacity(self.trees.len() + 1);
        out.push(current.clone());
        for t in &self.trees {
            for (i, f) in current.iter_mut().enumerate() {
                *f += self.learning_rate * t.predict_row(x.row(i));
            }
            out.push(current.clone());
        }
        out
    }
}

pub(crate) fn fit(x: &Matrix, y: &[f64], params: &GbmParams, loss: LossSpec) -> Gbm {
    let n = x.rows();
    let base_score = optimal_constant(loss, y).expect("nonempty training set");
    let mut f = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_stages);
    let mut pseudo = vec![0.0; n];
    for _ in 0..params.n_stages {
        for i in 0..n {
            pseudo[i] = loss.negative_gradient(y[i], f[i]);
        }
        let leaf = |rows: &[usize]| {
            let resid: Vec<f64> = rows.iter().map(|&i| y[i] - f[i]).collect();
            optimal_constant(loss, &resid).expect("nonempty leaf")
        };
        let tree = TreeBuilder {
            x,
            targets: &pseudo,
            criterion: LossSpec::Squared,
            params: params.tree,
            features_per_node: None,
            leaf_value: &leaf,
        }
        .build((0..n).collect());
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += params.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    Gbm {
        base_score,
        learning_rate: params.learning_rate,
        trees,
    }
}
