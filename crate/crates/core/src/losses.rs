//! Training objectives.
//!
//! All four losses are functions of the residual `r = y - yhat`. Squared
//! loss uses the `r^2 / 2` convention so its negative gradient is `r`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_HUBER_DELTA: f64 = 1.0;
pub const DEFAULT_QUANTILE_TAU: f64 = 0.5;

const HUBER_TOL: f64 = 1e-9;
const HUBER_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LossError {
    #[error("optimal constant of an empty sample is undefined")]
    EmptySample,
    #[error("huber delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("quantile tau must lie in (0, 1), got {0}")]
    BadTau(f64),
    #[error("unknown loss kind {0:?}")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    Squared,
    Absolute,
    Huber { delta: f64 },
    Quantile { tau: f64 },
}

impl LossSpec {
    pub fn huber(delta: f64) -> Result<Self, LossError> {
        if delta > 0.0 && delta.is_finite() {
            Ok(Self::Huber { delta })
        } else {
            Err(LossError::BadDelta(delta))
        }
    }

    pub fn quantile(tau: f64) -> Result<Self, LossError> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Self::Quantile { tau })
        } else {
            Err(LossError::BadTau(tau))
        }
    }

    /// Parses a kind name (`squared`, `absolute`, `huber`, `quantile`).
    pub fn from_kind(kind: &str, delta: f64, tau: f64) -> Result<Self, LossError> {
        match kind {
            "squared" | "squared_error" => Ok(Self::Squared),
            "absolute" | "absolute_error" => Ok(Self::Absolute),
            "huber" => Self::huber(delta),
            "quantile" => Self::quantile(tau),
            other => Err(LossError::UnknownKind(other.to_string())),
        }
    }

    /// The four-loss set used by default: squared, absolute, Huber(1), quantile(0.5).
    pub fn default_set() -> Vec<LossSpec> {
        vec![
            Self::Squared,
            Self::Absolute,
            Self::Huber {
                delta: DEFAULT_HUBER_DELTA,
            },
            Self::Quantile {
                tau: DEFAULT_QUANTILE_TAU,
            },
        ]
    }

    pub fn validate(&self) -> Result<(), LossError> {
        match *self {
            Self::Huber { delta } => Self::huber(delta).map(|_| ()),
            Self::Quantile { tau } => Self::quantile(tau).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Squared => "squared",
            Self::Absolute => "absolute",
            Self::Huber { .. } => "huber",
            Self::Quantile { .. } => "quantile",
        }
    }

    pub fn value(&self, y: f64, yhat: f64) -> f64 {
        loss_value(*self, y, yhat)
    }

    pub fn negative_gradient(&self, y: f64, yhat: f64) -> f64 {
        negative_gradient(*self, y, yhat)
    }

    /// Σ loss(yᵢ, ŷᵢ).
    pub fn total(&self, y: &[f64], yhat: &[f64]) -> f64 {
        y.iter().zip(yhat).map(|(&a, &b)| loss_value(*self, a, b)).sum()
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Huber { delta } => write!(f, "huber(delta={delta})"),
            Self::Quantile { tau } => write!(f, "quantile(tau={tau})"),
            other => f.write_str(other.kind_name()),
        }
    }
}

pub fn loss_value(spec: LossSpec, y: f64, yhat: f64) -> f64 {
    let r = y - yhat;
    match spec {
        LossSpec::Squared => 0.5 * r * r,
        LossSpec::Absolute => r.abs(),
        LossSpec::Huber { delta } => {
            if r.abs() <= delta {
                0.5 * r * r
            } else {
                delta * (r.abs() - 0.5 * delta)
            }
        }
        LossSpec::Quantile { tau } => {
            if r >= 0.0 {
                tau * r
            } else {
                (tau - 1.0) * r
            }
        }
    }
}

/// `-d loss / d yhat`. Absolute and quantile take the 0 subgradient at `r = 0`.
pub fn negative_gradient(spec: LossSpec, y: f64, yhat: f64) -> f64 {
    let r = y - yhat;
    match spec {
        LossSpec::Squared => r,
        LossSpec::Absolute => sign(r),
        LossSpec::Huber { delta } => {
            if r.abs() <= delta {
                r
            } else {
                delta * sign(r)
            }
        }
        LossSpec::Quantile { tau } => {
            if r > 0.0 {
                tau
            } else if r < 0.0 {
                tau - 1.0
            } else {
                0.0
            }
        }
    }
}

fn sign(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Constant `c` minimising `Σ loss(yᵢ, c)`.
///
/// Mean for squared loss, lower median for absolute loss, lower
/// τ-quantile for quantile loss. Huber runs iterative reweighting and then
/// polishes the result with an exact solve on the final inlier set.
pub fn optimal_constant(spec: LossSpec, ys: &[f64]) -> Result<f64, LossError> {
    if ys.is_empty() {
        return Err(LossError::EmptySample);
    }
    Ok(match spec {
        LossSpec::Squared => mean(ys),
        LossSpec::Absolute => lower_quantile(ys, 0.5),
        LossSpec::Quantile { tau } => lower_quantile(ys, tau),
        LossSpec::Huber { delta } => huber_location(ys, delta),
    })
}

pub(crate) fn mean(ys: &[f64]) -> f64 {
    ys.iter().sum::<f64>() / ys.len() as f64
}

/// Smallest sample value `q` with `#{y <= q} >= tau * n`.
fn lower_quantile(ys: &[f64], tau: f64) -> f64 {
    let n = ys.len();
    // the 1e-9 guard keeps e.g. 0.7 * 10 from rounding up past 7
    let rank = ((tau * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let k = rank.min(n) - 1;
    let mut buf = ys.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

fn huber_objective(ys: &[f64], c: f64, delta: f64) -> f64 {
    ys.iter()
        .map(|&y| loss_value(LossSpec::Huber { delta }, y, c))
        .sum()
}

fn huber_location(ys: &[f64], delta: f64) -> f64 {
    let mut c = lower_quantile(ys, 0.5);
    for _ in 0..HUBER_MAX_ITER {
        let (mut num, mut den) = (0.0, 0.0);
        for &y in ys {
            let r = (y - c).abs();
            let w = if r <= delta { 1.0 } else { delta / r };
            num += w * y;
            den += w;
        }
        let next = num / den;
        let step = (next - c).abs();
        c = next;
        if step <= HUBER_TOL {
            break;
        }
    }

    // At the optimum, Σ over inliers (y - c) = delta * (#below - #above),
    // which is linear in c once the inlier set is fixed.
    let mut best = c;
    let mut best_obj = huber_objective(ys, c, delta);
    let mut cur = c;
    for _ in 0..8 {
        let (mut sum_in, mut n_in, mut above, mut below) = (0.0, 0usize, 0i64, 0i64);
        for &y in ys {
            let r = y - cur;
            if r.abs() <= delta {
                sum_in += y;
                n_in += 1;
            } else if r > 0.0 {
                above += 1;
            } else {
                below += 1;
            }
        }
        if n_in == 0 {
            break;
        }
        let next = (sum_in + delta * (above - below) as f64) / n_in as f64;
        let obj = huber_objective(ys, next, delta);
        if obj < best_obj {
            best = next;
            best_obj = obj;
        }
        if next == cur {
            break;
        }
        cur = next;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_specs() -> Vec<LossSpec> {
        vec![
            LossSpec::Squared,
            LossSpec::Absolute,
            LossSpec::Huber { delta: 1.0 },
            LossSpec::Huber { delta: 0.2 },
            LossSpec::Quantile { tau: 0.5 },
            LossSpec::Quantile { tau: 0.25 },
            LossSpec::Quantile { tau: 0.9 },
        ]
    }

    #[test]
    fn zero_residual_is_zero_loss() {
        for s in all_specs() {
            assert_eq!(s.value(0.3, 0.3), 0.0);
        }
    }

    #[test]
    fn huber_matches_squared_inside_delta() {
        let h = LossSpec::Huber { delta: 1.0 };
        assert_eq!(h.value(0.5, 0.0), 0.125);
        assert_eq!(h.value(0.5, 0.0), LossSpec::Squared.value(0.5, 0.0));
    }

    #[test]
    fn quantile_half_is_half_absolute() {
        let q = LossSpec::Quantile { tau: 0.5 };
        for r in [-2.0, -0.3, 0.0, 0.7] {
            let branch = if r >= 0.0 { 0.5 * r } else { (0.5 - 1.0) * r };
            assert_eq!(q.value(r, 0.0), branch);
            assert_eq!(q.value(r, 0.0), 0.5 * LossSpec::Absolute.value(r, 0.0));
        }
    }

    #[test]
    fn gradient_conventions() {
        assert_eq!(LossSpec::Squared.negative_gradient(0.3, 0.0), 0.3);
        assert_eq!(LossSpec::Absolute.negative_gradient(0.4, 0.4), 0.0);
        assert_eq!(LossSpec::Quantile { tau: 0.3 }.negative_gradient(0.4, 0.4), 0.0);
        assert_eq!(LossSpec::Quantile { tau: 0.3 }.negative_gradient(1.0, 0.0), 0.3);
        assert!((LossSpec::Quantile { tau: 0.3 }.negative_gradient(0.0, 1.0) + 0.7).abs() < 1e-15);
        assert_eq!(LossSpec::Huber { delta: 0.5 }.negative_gradient(2.0, 0.0), 0.5);
    }

    #[test]
    fn huber_seam_is_smooth() {
        let delta = 0.7;
        let h = LossSpec::Huber { delta };
        let inside = 0.5 * delta * delta;
        let outside = delta * (delta - 0.5 * delta);
        assert!((inside - outside).abs() <= 1e-12);
        assert!((h.value(delta, 0.0) - inside).abs() <= 1e-12);
        let g_in = delta;
        let g_out = delta * 1.0;
        assert!((g_in - g_out).abs() <= 1e-12);
        assert!((h.negative_gradient(delta, 0.0) - delta).abs() <= 1e-12);
    }

    #[test]
    fn optimal_constants() {
        assert_eq!(optimal_constant(LossSpec::Squared, &[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(optimal_constant(LossSpec::Absolute, &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(optimal_constant(LossSpec::Absolute, &[3.0, 1.0, 2.0, 4.0]).unwrap(), 2.0);
        assert_eq!(
            optimal_constant(LossSpec::Squared, &[]),
            Err(LossError::EmptySample)
        );
    }

    #[test]
    fn quantile_constant_matches_candidate_scan() {
        use rand::Rng;
        let mut rng = crate::seed::rng(11);
        let spec = LossSpec::Quantile { tau: 0.25 };
        for _ in 0..50 {
            let ys: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
            // exhaustive scan over the sample values, lowest value wins ties
            let mut sorted = ys.clone();
            sorted.sort_by(f64::total_cmp);
            let mut best = (f64::INFINITY, f64::NAN);
            for &c in &sorted {
                let total: f64 = ys.iter().map(|&y| spec.value(y, c)).sum();
                if total < best.0 {
                    best = (total, c);
                }
            }
            assert_eq!(optimal_constant(spec, &ys).unwrap(), best.1);
        }
    }

    #[test]
    fn spec_constructors_validate() {
        assert!(LossSpec::huber(0.0).is_err());
        assert!(LossSpec::quantile(1.0).is_err());
        assert!(LossSpec::from_kind("logcosh", 1.0, 0.5).is_err());
        assert_eq!(LossSpec::default_set().len(), 4);
    }

    proptest! {
        #[test]
        fn losses_are_nonnegative(y in -5.0f64..5.0, yhat in -5.0f64..5.0) {
            for s in all_specs() {
                prop_assert!(s.value(y, yhat) >= 0.0);
            }
        }

        #[test]
        fn huber_equals_squared_within_delta(r in -0.2f64..0.2) {
            let h = LossSpec::Huber { delta: 0.2 };
            prop_assert_eq!(h.value(r, 0.0), LossSpec::Squared.value(r, 0.0));
        }

        #[test]
        fn optimal_constant_beats_random_candidates(
            ys in prop::collection::vec(-2.0f64..2.0, 1..25),
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed);
            for spec in all_specs() {
                let c = optimal_constant(spec, &ys).unwrap();
                let at_opt: f64 = ys.iter().map(|&y| spec.value(y, c)).sum();
                for _ in 0..1000 {
                    let cand = rng.random_range(-3.0..3.0);
                    let at_cand: f64 = ys.iter().map(|&y| spec.value(y, cand)).sum();
                    prop_assert!(at_opt <= at_cand + 1e-12 * (1.0 + at_cand.abs()),
                        "{spec}: {at_opt} > {at_cand} at {cand}");
                }
            }
        }
    }
}
