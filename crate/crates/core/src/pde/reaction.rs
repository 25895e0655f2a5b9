use super::grid::{clamp_to_simplex, SIMPLEX_TOL};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Reaction terms `(F1, F2, F3)` at a simplex point, for lattice dimension `d`.
pub fn reaction(rho: [f64; 3], p: &ModelParams, d: usize) -> Result<[f64; 3]> {
    Ok(reaction_unchecked(clamp_to_simplex(rho)?, p, d))
}

#[inline]
pub(crate) fn reaction_unchecked(rho: [f64; 3], p: &ModelParams, d: usize) -> [f64; 3] {
    let [r1, r2, r3] = rho;
    let r0 = 1.0 - r1 - r2 - r3;
    let birth = 2.0 * d as f64 * (p.lambda1 * r1 + p.lambda2 * r3);
    let r = p.release;
    [
        birth * r0 + r3 - (r + 1.0) * r1,
        r * r0 + r3 - birth * r2 - r2,
        birth * r2 + r * r1 - 2.0 * r3,
    ]
}

/// Reaction terms `(F1, H, J)` in the coordinates `(rho1, T, R)`.
pub fn reaction_transformed(q: [f64; 3], p: &ModelParams, d: usize) -> Result<[f64; 3]> {
    let [r1, t, rr] = q;
    let tol = SIMPLEX_TOL;
    let ok = q.iter().all(|c| c.is_finite())
        && r1 >= -tol
        && r1 <= t + tol
        && t <= 1.0 + tol
        && r1 <= rr + tol
        && rr <= 1.0 + tol
        // rho2 = 1 - R - T + rho1 >= 0
        && 1.0 - rr - t + r1 >= -tol;
    if !ok {
        return Err(Error::OutOfSimplex(q));
    }
    let birth = 2.0 * d as f64 * ((p.lambda1 - p.lambda2) * r1 + p.lambda2 * t);
    Ok([
        birth * (rr - r1) + t - (p.release + 2.0) * r1,
        birth * (1.0 - t) - t,
        -(p.release + 1.0) * rr + 1.0,
    ])
}

/// Reaction used by the solver. `Zero` switches the reaction off so that pure
/// diffusion can be tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reaction {
    #[default]
    Model,
    Zero,
}
