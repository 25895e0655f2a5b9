use serde::{Deserialize, Serialize};

use super::grid::{transform, Profile};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Rounding slack allowed in the order test.
pub const ORDER_SLACK: f64 = 1e-12;

/// First node where the order `(rho1, T, R)_a <= (rho1, T, R)_b` fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderViolation {
    pub node: usize,
    /// 0 for `rho1`, 1 for `T`, 2 for `R`.
    pub component: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Checks `ua <= ub` nodewise in the transformed coordinates.
pub fn comparison_check(ua: &Profile, ub: &Profile) -> Result<Option<OrderViolation>> {
    if ua.grid != ub.grid {
        return Err(Error::GridMismatch(format!(
            "{:?} vs {:?}",
            ua.grid, ub.grid
        )));
    }
    Ok(first_violation(&ua.values, &ub.values))
}

pub(crate) fn first_violation(a: &[[f64; 3]], b: &[[f64; 3]]) -> Option<OrderViolation> {
    for (node, (x, y)) in a.iter().zip(b).enumerate() {
        let (qa, qb) = (transform(*x), transform(*y));
        for component in 0..3 {
            if qa[component] > qb[component] + ORDER_SLACK {
                return Some(OrderViolation {
                    node,
                    component,
                    lower: qa[component],
                    upper: qb[component],
                });
            }
        }
    }
    None
}

/// Which of the sufficient conditions for a unique attracting stationary
/// profile hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub h1: bool,
    pub h2: bool,
    pub h3: bool,
    /// Smallest Dirichlet eigenvalue used by `h2`.
    pub delta1: f64,
}

/// Strict-inequality checks; `d` is the lattice dimension.
pub fn check_conditions(p: &ModelParams, d: usize, delta1: f64) -> Result<ConditionReport> {
    if !(delta1.is_finite() && delta1 > 0.0) {
        return Err(Error::InvalidParams(format!(
            "delta1 must be positive, got {delta1}"
        )));
    }
    let two_d = 2.0 * d as f64;
    let gap = two_d * (p.lambda1 - p.lambda2);
    let mixed = two_d * p.lambda2;
    let diff = p.effective_diffusion();
    let r = p.release;
    Ok(ConditionReport {
        h1: diff >= 1.0 && r + 1.0 > gap && 1.0 > mixed,
        h2: diff * delta1 + r + 2.0 > gap && diff * delta1 + 1.0 > mixed,
        h3: r + 2.0 > gap && 1.0 > mixed,
        delta1,
    })
}
