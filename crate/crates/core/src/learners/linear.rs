//! Linear regression: ridge for squared loss, ε-smoothed IRLS otherwise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::params::LinearParams;
use super::LearnError;
use crate::losses::LossSpec;
use crate::Matrix;

/// Relative pivot size below which the normal equations count as singular.
const SINGULAR_PIVOT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// IRLS iterations actually run (0 for squared loss).
    pub iterations: usize,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }
}

/// Solves `min Σ wᵢ (yᵢ - b - xᵢ·β)² + λ‖β‖²` with an unpenalised intercept.
pub(crate) fn weighted_ridge(
    x: &Matrix,
    y: &[f64],
    sample_weights: Option<&[f64]>,
    lambda: f64,
) -> Result<(Vec<f64>, f64), LearnError> {
    let d = x.cols();
    let p = d + 1;
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut nz: Vec<(usize, f64)> = Vec::with_capacity(p);
    for i in 0..x.rows() {
        let w = sample_weights.map_or(1.0, |s| s[i]);
        nz.clear();
        nz.extend(
            x.row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, &v)| (j, v)),
        );
        nz.push((d, 1.0));
        for &(j, vj) in &nz {
            let wv = w * vj;
            rhs[j] += wv * y[i];
            for &(k, vk) in &nz {
                if k <= j {
                    a[(j, k)] += wv * vk;
                }
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[(k, j)] = a[(j, k)];
        }
    }
    for j in 0..d {
        a[(j, j)] += lambda;
    }
    let max_diag = (0..p).map(|j| a[(j, j)]).fold(0.0, f64::max);
    let singular = || {
        LearnError::Singular(format!(
            "normal equations are singular (lambda = {lambda}); use ridge_lambda > 0"
        ))
    };
    let chol = a.cholesky().ok_or_else(singular)?;
    let l = chol.l_dirty();
    let min_pivot = (0..p).map(|j| l[(j, j)] * l[(j, j)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > SINGULAR_PIVOT * max_diag) {
        return Err(singular());
    }
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok((sol.as_slice()[..d].to_vec(), sol[d]))
}

fn irls_weight(loss: LossSpec, r: f64, eps: f64) -> f64 {
    let a = r.abs().max(eps);
    match loss {
        LossSpec::Squared => 1.0,
        LossSpec::Absolute => 1.0 / a,
        LossSpec::Huber { delta } => {
            if r.abs() <= delta {
                1.0
            } else {
                delta / a
            }
        }
        LossSpec::Quantile { tau } => {
            if r >= 0.0 {
                tau / a
            } else {
                (1.0 - tau) / a
            }
        }
    }
}

pub(crate) fn fit(
    x: &Matrix,
    y: &[f64],
    loss: LossSpec,
    params: &LinearParams,
) -> Result<LinearModel, LearnError> {
    let (mut w, mut b) = weighted_ridge(x, y, None, params.ridge_lambda)?;
    if loss == LossSpec::Squared {
        return Ok(LinearModel {
            weights: w,
            intercept: b,
            iterations: 0,
        });
    }
    let mut iterations = 0;
    let mut sw = vec![0.0; y.len()];
    for _ in 0..params.irls_max_iter {
        iterations += 1;
        for i in 0..y.len() {
            let r = y[i] - (b + x.row(i).iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            sw[i] = irls_weight(loss, r, params.irls_epsilon);
        }
        let (nw, nb) = weighted_ridge(x, y, Some(&sw), params.ridge_lambda)?;
        let change = nw
            .iter()
            .zip(&w)
            .map(|(a, c)| (a - c).abs())
            .fold((nb - b).abs(), f64::max);
        w = nw;
        b = nb;
        if change <= params.irls_tol {
            break;
        }
    }
    Ok(LinearModel {
        weights: w,
        intercept: b,
        iterations,
    })
}
