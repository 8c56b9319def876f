//! CART regression trees with loss-specific split gain.
//!
//! A node's cost is `Σ loss(yᵢ, c*)` where `c*` is the loss-optimal
//! constant over the node's rows. A split is chosen to minimise the summed
//! cost of the two children over every (feature, midpoint threshold) pair;
//! ties go to the lowest feature index, then the lowest threshold. Rows go
//! left when `x <= threshold`.
//!
//! Costs used for the final comparison are always summed over rows in
//! ascending row order, so two candidates inducing the same partition get
//! bitwise-equal costs. Squared loss additionally uses centred prefix sums
//! to screen candidates; near-ties found by the screen are re-scored the
//! canonical way.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::TreeParams;
use crate::losses::{optimal_constant, LossSpec};
use crate::Matrix;

/// Splits must reduce the cost by more than `MIN_GAIN * (1 + parent cost)`.
pub const MIN_GAIN: f64 = 1e-12;
const SCREEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        samples: usize,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn samples(&self) -> usize {
        match self {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => *samples,
        }
    }

    /// Depth of the subtree; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&Node> {
        match self {
            Node::Leaf { .. } => vec![self],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: Node,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// True when every leaf holds at least `min_samples_leaf` rows and the
    /// depth stays within `max_depth`.
    pub fn respects(&self, params: &TreeParams) -> bool {
        self.depth() <= params.max_depth
            && self
                .root
                .leaves()
                .iter()
                .all(|l| l.samples() >= params.min_samples_leaf)
    }
}

/// Canonical node cost: rows summed in the order given.
pub(crate) fn node_cost(loss: LossSpec, ys: &[f64]) -> f64 {
    let c = optimal_constant(loss, ys).expect("nonempty node");
    ys.iter().map(|&y| loss.value(y, c)).sum()
}

pub(crate) struct TreeBuilder<'a> {
    pub x: &'a Matrix,
    /// Targets the split criterion is evaluated on.
    pub targets: &'a [f64],
    pub criterion: LossSpec,
    pub params: TreeParams,
    /// Features examined per node; `None` means all of them.
    pub features_per_node: Option<(usize, ChaCha8Rng)>,
    pub leaf_value: &'a dyn Fn(&[usize]) -> f64,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    screen: f64,
}

impl TreeBuilder<'_> {
    /// `rows` must be sorted ascending; duplicates (bootstrap) are allowed.
    pub fn build(mut self, rows: Vec<usize>) -> RegressionTree {
        let root = self.grow(rows, 0);
        RegressionTree { root }
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> Node {
        let n = rows.len();
        let p = self.params;
        let leaf = |b: &Self, rows: &[usize]| Node::Leaf {
            value: (b.leaf_value)(rows),
            samples: rows.len(),
        };
        if depth >= p.max_depth || n < p.min_samples_split.max(2) || n < 2 * p.min_samples_leaf {
            return leaf(self, &rows);
        }
        let features = self.node_features();
        let Some((feature, threshold, left, right)) = self.best_split(&rows, &features) else {
            return leaf(self, &rows);
        };
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        Node::Split {
            feature,
            threshold,
            samples: n,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn node_features(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        match &mut self.features_per_node {
            Some((m, rng)) if *m < d => {
                let mut f = index::sample(rng, d, *m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn targets_of(&self, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.targets[i]).collect()
    }

    fn partition(&self, rows: &[usize], feature: usize, threshold: f64) -> (Vec<usize>, Vec<usize>) {
        rows.iter()
            .partition(|&&i| self.x.get(i, feature) <= threshold)
    }

    fn canonical_cost(&self, rows: &[usize], feature: usize, threshold: f64) -> f64 {
        let (l, r) = self.partition(rows, feature, threshold);
        node_cost(self.criterion, &self.targets_of(&l)) + node_cost(self.criterion, &self.targets_of(&r))
    }

    fn best_split(
        &self,
        rows: &[usize],
        features: &[usize],
    ) -> Option<(usize, f64, Vec<usize>, Vec<usize>)> {
        let n = rows.len();
        let msl = self.params.min_samples_leaf;
        let ys = self.targets_of(rows);
        let parent = node_cost(self.criterion, &ys);
        if parent <= 0.0 {
            return None;
        }
        let squared = self.criterion == LossSpec::Squared;
        let mu = ys.iter().sum::<f64>() / n as f64;

        let mut cands: Vec<Candidate> = Vec::new();
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for &f in features {
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (self.x.get(i, f), self.targets[i] - mu)));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let (total1, total2) = pairs
                .iter()
                .fold((0.0, 0.0), |(s1, s2), &(_, t)| (s1 + t, s2 + t * t));
            let (mut s1, mut s2) = (0.0, 0.0);
            for k in 0..n - 1 {
                let (xv, t) = pairs[k];
                s1 += t;
                s2 += t * t;
                let next = pairs[k + 1].0;
                if next <= xv {
                    continue;
                }
                let nl = k + 1;
                if nl < msl || n - nl < msl {
                    continue;
                }
                let threshold = 0.5 * (xv + next);
                let screen = if squared {
                    let nr = (n - nl) as f64;
                    let (r1, r2) = (total1 - s1, total2 - s2);
                    0.5 * ((s2 - s1 * s1 / nl as f64) + (r2 - r1 * r1 / nr))
                } else {
                    self.canonical_cost(rows, f, threshold)
                };
                cands.push(Candidate {
                    feature: f,
                    threshold,
                    screen,
                });
            }
        }
        if cands.is_empty() {
            return None;
        }

        let best_screen = cands.iter().map(|c| c.screen).fold(f64::INFINITY, f64::min);
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in cands.iter().enumerate() {
            let cost = if squared {
                if c.screen > best_screen + SCREEN_TOL * parent {
                    continue;
                }
                self.canonical_cost(rows, c.feature, c.threshold)
            } else {
                c.screen
            };
            if best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, i));
            }
        }
        let (cost, i) = best?;
        if parent - cost <= MIN_GAIN * (1.0 + parent) {
            return None;
        }
        let c = &cands[i];
        let (l, r) = self.partition(rows, c.feature, c.threshold);
        Some((c.feature, c.threshold, l, r))
    }
}

/// Fits a tree whose leaves hold the loss-optimal constant of their rows.
pub(crate) fn fit_regression_tree(
    x: &Matrix,
    y: &[f64],
    rows: Vec<usize>,
    params: TreeParams,
    loss: LossSpec,
    features_per_node: Option<(usize, ChaCha8Rng)>,
) -> RegressionTree {
    let leaf = |rows: &[usize]| {
        let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        optimal_constant(loss, &ys).expect("nonempty leaf")
    };
    TreeBuilder {
        x,
        targets: y,
        criterion: loss,
        params,
        features_per_node,
        leaf_value: &leaf,
    }
    .build(rows)
}
