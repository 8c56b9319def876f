//! Loss-averaged models: one learner family trained once per loss, predicting
//! the unweighted mean of the per-loss models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::learners::{Family, HyperParams, LearnError, Predictor};
use crate::losses::LossSpec;
use crate::seed::{self, Stream};
use crate::tuning::{TuneError, VoteRule, VotedModel};
use crate::Matrix;

/// Each loss slot holds the voted winners of that loss's tuning lane; a
/// slot with a single winner predicts exactly like that base model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedModel {
    pub family: Family,
    pub loss_set: Vec<LossSpec>,
    pub constituents: Vec<VotedModel>,
}

pub fn fit_refined(
    family: Family,
    x: &Matrix,
    y: &[f64],
    loss_set: &[LossSpec],
    params_per_loss: &[Vec<HyperParams>],
    rule: VoteRule,
    seed: u64,
) -> Result<RefinedModel, TuneError> {
    if loss_set.is_empty() {
        return Err(TuneError::Config("refined model needs at least one loss".into()));
    }
    if params_per_loss.len() != loss_set.len() {
        return Err(TuneError::Config(format!(
            "{} losses but parameters for {}",
            loss_set.len(),
            params_per_loss.len()
        )));
    }
    if let Some(p) = params_per_loss.iter().flatten().find(|p| p.family() != family) {
        return Err(TuneError::Config(format!(
            "refined {family} model given {} parameters",
            p.family()
        )));
    }
    let constituents = loss_set
        .par_iter()
        .zip(params_per_loss)
        .enumerate()
        .map(|(m, (&loss, params))| {
            VotedModel::fit(params, x, y, loss, rule, seed::derive(seed, Stream::LossSlot, m as u64))
                .map_err(|e| annotate(e, loss))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RefinedModel {
        family,
        loss_set: loss_set.to_vec(),
        constituents,
    })
}

fn annotate(e: TuneError, loss: LossSpec) -> TuneError {
    match e {
        TuneError::Learn(source) => TuneError::Learn(LearnError::Loss {
            loss: loss.to_string(),
            source: Box::new(source),
        }),
        other => other,
    }
}

impl Predictor for RefinedModel {
    fn n_features(&self) -> usize {
        self.constituents[0].n_features()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        if self.constituents.len() == 1 {
            return self.constituents[0].predict_row(row);
        }
        self.constituents.iter().map(|c| c.predict_row(row)).sum::<f64>()
            / self.constituents.len() as f64
    }
}

pub fn predict_refined(rm: &RefinedModel, x: &Matrix) -> Result<Vec<f64>, LearnError> {
    rm.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{LinearParams, TreeParams};
    use proptest::prelude::*;
    use rand::Rng;

    fn data(seed: u64, n: usize, d: usize) -> (Matrix, Vec<f64>) {
        let mut rng = crate::seed::rng(seed);
        let x = Matrix::new(n, d, (0..n * d).map(|_| rng.random::<f64>()).collect());
        let y = (0..n).map(|i| 0.5 * x.get(i, 0) + 0.5 * rng.random::<f64>()).collect();
        (x, y)
    }

    fn tree() -> HyperParams {
        HyperParams::Tree(TreeParams { max_depth: 3, ..Default::default() })
    }

    fn fit_default(seed: u64, x: &Matrix, y: &[f64], losses: &[LossSpec]) -> RefinedModel {
        let params = vec![vec![tree()]; losses.len()];
        fit_refined(Family::Tree, x, y, losses, &params, VoteRule::Mean, seed).unwrap()
    }

    #[test]
    fn single_loss_is_identity() {
        let (x, y) = data(1, 40, 3);
        let rm = fit_default(3, &x, &y, &[LossSpec::Absolute]);
        let base = crate::learners::fit(
            &tree(),
            &x,
            &y,
            LossSpec::Absolute,
            seed::derive(seed::derive(3, Stream::LossSlot, 0), Stream::VoteMember, 0),
        )
        .unwrap();
        assert_eq!(predict_refined(&rm, &x).unwrap(), base.predict(&x).unwrap());
    }

    #[test]
    fn default_loss_set_structure() {
        let (x, y) = data(2, 40, 3);
        let losses = LossSpec::default_set();
        let rm = fit_default(0, &x, &y, &losses);
        assert_eq!(rm.constituents.len(), 4);
        assert!(rm.constituents.iter().all(|c| c.family() == Family::Tree));
        for (c, l) in rm.constituents.iter().zip(&losses) {
            assert_eq!(c.loss(), *l);
        }
    }

    #[test]
    fn same_seed_same_serialization() {
        let (x, y) = data(3, 40, 3);
        let losses = LossSpec::default_set();
        let a = serde_json::to_string(&fit_default(9, &x, &y, &losses)).unwrap();
        let b = serde_json::to_string(&fit_default(9, &x, &y, &losses)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_matches_recomputation_and_bounds() {
        let (x, y) = data(4, 60, 4);
        let rm = fit_default(1, &x, &y, &LossSpec::default_set());
        let p = predict_refined(&rm, &x).unwrap();
        let per: Vec<Vec<f64>> = rm.constituents.iter().map(|c| c.predict(&x).unwrap()).collect();
        for i in 0..x.rows() {
            let vals: Vec<f64> = per.iter().map(|v| v[i]).collect();
            let mean = vals.iter().sum::<f64>() / 4.0;
            assert!((p[i] - mean).abs() <= 1e-15);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo <= p[i] && p[i] <= hi);
        }
    }

    #[test]
    fn errors() {
        let (x, y) = data(5, 10, 2);
        assert!(fit_refined(Family::Tree, &x, &y, &[], &[], VoteRule::Mean, 0).is_err());
        assert!(fit_refined(
            Family::Tree,
            &x,
            &y,
            &[LossSpec::Squared],
            &[vec![HyperParams::Linear(LinearParams::default())]],
            VoteRule::Mean,
            0
        )
        .is_err());
        let rm = fit_default(0, &x, &y, &[LossSpec::Squared]);
        assert!(matches!(
            predict_refined(&rm, &Matrix::zeros(2, 3)),
            Err(LearnError::Dimension { .. })
        ));
    }

    #[test]
    fn learner_errors_name_the_loss() {
        let x = Matrix::zeros(4, 2);
        let y = vec![0.1, 0.2, 0.3, 0.4];
        let p = HyperParams::Linear(LinearParams { ridge_lambda: 0.0, ..Default::default() });
        let err = fit_refined(
            Family::Linear,
            &x,
            &y,
            &[LossSpec::Absolute],
            &[vec![p]],
            VoteRule::Mean,
            0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("absolute"), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn jensen_bound(seed in any::<u64>()) {
            let (x, y) = data(seed, 50, 3);
            let rm = fit_default(seed, &x, &y, &LossSpec::default_set());
            let p = predict_refined(&rm, &x).unwrap();
            let mse = crate::metrics::mse(&y, &p).unwrap();
            let mean_mse = rm
                .constituents
                .iter()
                .map(|c| crate::metrics::mse(&y, &c.predict(&x).unwrap()).unwrap())
                .sum::<f64>()
                / 4.0;
            prop_assert!(mse <= mean_mse + 1e-12);
        }
    }
}
