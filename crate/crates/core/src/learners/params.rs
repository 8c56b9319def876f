use std::fmt;

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Tree,
    Forest,
    Gbm,
    Linear,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Tree, Family::Forest, Family::Gbm, Family::Linear];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Tree => "tree",
            Family::Forest => "forest",
            Family::Gbm => "gbm",
            Family::Linear => "linear",
        }
    }

    /// Method label used in report tables.
    pub fn method_label(&self) -> &'static str {
        match self {
            Family::Tree => "DecisionTree",
            Family::Forest => "RandomForest",
            Family::Gbm => "GradientBoosting",
            Family::Linear => "LinearRegression",
        }
    }

    /// Label of the loss-averaged variant.
    pub fn averaged_label(&self) -> &'static str {
        match self {
            Family::Tree => "Average DecisionTree",
            Family::Forest => "Average RandomForestRegressor",
            Family::Gbm => "Average GradientBoosting",
            Family::Linear => "Average LinearRegression",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }

    pub fn default_params(&self) -> HyperParams {
        match self {
            Family::Tree => HyperParams::Tree(TreeParams::default()),
            Family::Forest => HyperParams::Forest(ForestParams::default()),
            Family::Gbm => HyperParams::Gbm(GbmParams::default()),
            Family::Linear => HyperParams::Linear(LinearParams::default()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.max_depth < 1 {
            return Err(LearnError::InvalidParams("max_depth must be >= 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(LearnError::InvalidParams(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    #[serde(flatten)]
    pub tree: TreeParams,
    pub n_trees: usize,
    pub feature_fraction: f64,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            tree: TreeParams {
                max_depth: 8,
                min_samples_leaf: 3,
                min_samples_split: 6,
            },
            n_trees: 50,
            feature_fraction: 1.0 / 3.0,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    #[serde(flatten)]
    pub tree: TreeParams,
    pub n_stages: usize,
    pub learning_rate: f64,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            tree: TreeParams {
                max_depth: 3,
                min_samples_leaf: 1,
                min_samples_split: 2,
            },
            n_stages: 100,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub ridge_lambda: f64,
    pub irls_max_iter: usize,
    pub irls_tol: f64,
    pub irls_epsilon: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            ridge_lambda: 1.0,
            irls_max_iter: 100,
            irls_tol: 1e-6,
            irls_epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HyperParams {
    Tree(TreeParams),
    Forest(ForestParams),
    Gbm(GbmParams),
    Linear(LinearParams),
}

impl HyperParams {
    pub fn family(&self) -> Family {
        match self {
            HyperParams::Tree(_) => Family::Tree,
            HyperParams::Forest(_) => Family::Forest,
            HyperParams::Gbm(_) => Family::Gbm,
            HyperParams::Linear(_) => Family::Linear,
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        match self {
            HyperParams::Tree(t) => t.validate(),
            HyperParams::Forest(f) => {
                f.tree.validate()?;
                if f.n_trees < 1 {
                    return Err(LearnError::InvalidParams("n_trees must be >= 1".into()));
                }
                if !(f.feature_fraction > 0.0 && f.feature_fraction <= 1.0) {
                    return Err(LearnError::InvalidParams(
                        "feature_fraction must lie in (0, 1]".into(),
                    ));
                }
                Ok(())
            }
            HyperParams::Gbm(g) => {
                g.tree.validate()?;
                if g.n_stages < 1 {
                    return Err(LearnError::InvalidParams("n_stages must be >= 1".into()));
                }
                if !(g.learning_rate > 0.0 && g.learning_rate <= 1.0) {
                    return Err(LearnError::InvalidParams(
                        "learning_rate must lie in (0, 1]".into(),
                    ));
                }
                Ok(())
            }
            HyperParams::Linear(l) => {
                if !(l.ridge_lambda >= 0.0) {
                    return Err(LearnError::InvalidParams(
                        "ridge_lambda must be >= 0".into(),
                    ));
                }
                if l.irls_max_iter < 1 || !(l.irls_tol > 0.0) || !(l.irls_epsilon > 0.0) {
                    return Err(LearnError::InvalidParams(
                        "IRLS settings must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Smallest training-set size this configuration can be fit on.
    pub fn min_train_samples(&self, n_features: usize) -> usize {
        match self {
            HyperParams::Tree(t) => t.min_samples_leaf,
            HyperParams::Forest(f) => f.tree.min_samples_leaf,
            HyperParams::Gbm(g) => g.tree.min_samples_leaf,
            HyperParams::Linear(l) if l.ridge_lambda == 0.0 => n_features + 1,
            HyperParams::Linear(_) => 1,
        }
    }
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // compact single-line JSON doubles as a stable grid-cell label
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}
