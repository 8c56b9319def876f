use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::ForestParams;
use super::tree::{fit_regression_tree, RegressionTree};
use crate::losses::LossSpec;
use crate::seed::{self, Stream};
use crate::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
    pub tree_seeds: Vec<u64>,
}

impl Forest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

pub(crate) fn features_per_node(params: &ForestParams, d: usize) -> usize {
    ((params.feature_fraction * d as f64) - 1e-9).ceil().clamp(1.0, d as f64) as usize
}

pub(crate) fn fit(x: &Matrix, y: &[f64], params: &ForestParams, loss: LossSpec, seed: u64) -> Forest {
    let n = x.rows();
    let m = features_per_node(params, x.cols());
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut tree_seeds = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let ts = seed::derive(seed, Stream::Tree, t as u64);
        let mut rng = seed::rng(ts);
        let rows: Vec<usize> = if params.bootstrap {
            let mut r: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let node_rng = seed::rng(seed::derive(ts, Stream::Node, 0));
        trees.push(fit_regression_tree(x, y, rows, params.tree, loss, Some((m, node_rng))));
        tree_seeds.push(ts);
    }
    Forest { trees, tree_seeds }
}
