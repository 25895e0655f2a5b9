use serde::{Deserialize, Serialize};

use super::grid::{max_abs_diff, Profile};
use super::solver::PdeProblem;
use crate::error::{Error, Result};

/// Settings of [`stationary_solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptions {
    /// L-infinity threshold between snapshots one `chunk` apart.
    pub tol: f64,
    pub t_max: f64,
    /// Time between convergence tests.
    pub chunk: f64,
    /// Step size; `None` picks the automatic stable step.
    pub dt: Option<f64>,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            tol: 1e-6,
            t_max: 1000.0,
            chunk: 1.0,
            dt: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StationaryOutcome {
    /// Midpoint of the two runs.
    pub profile: Profile,
    pub converged: bool,
    /// Both runs stopped moving while still apart.
    pub distinct_limits: bool,
    /// Run started from transformed `(0,0,0)` (all sterile).
    pub lower: Profile,
    /// Run started from transformed `(1,1,1)` (all wild).
    pub upper: Profile,
    pub time: f64,
    /// L-infinity distance between the two runs at `time`.
    pub gap: f64,
}

pub fn stationary_solve(problem: &PdeProblem, tol: f64, t_max: f64) -> Result<StationaryOutcome> {
    stationary_solve_with(
        problem,
        StationaryOptions {
            tol,
            t_max,
            ..Default::default()
        },
    )
}

/// Runs the extremal initial data until both settle and agree within
/// `2 tol`. When both settle apart and their gap stops shrinking, or when
/// `t_max` is reached, the outcome is flagged as not converged.
pub fn stationary_solve_with(
    problem: &PdeProblem,
    opts: StationaryOptions,
) -> Result<StationaryOutcome> {
    if !(opts.tol > 0.0 && opts.t_max > 0.0 && opts.chunk > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bad stationary options {opts:?}"
        )));
    }
    let grid = &problem.grid;
    let dt = opts.dt.unwrap_or_else(|| problem.auto_dt());
    let per_chunk = (opts.chunk / dt).ceil() as usize;
    let dt = opts.chunk / per_chunk as f64;

    let lower0 = Profile::from_transformed(grid, |_| [0.0, 0.0, 0.0])?;
    let upper0 = Profile::from_transformed(grid, |_| [1.0, 1.0, 1.0])?;
    let mut lo = problem.integrator(&lower0, dt)?;
    let mut hi = problem.integrator(&upper0, dt)?;

    let mut gap = max_abs_diff(lo.values(), hi.values());
    let mut converged = false;
    let mut distinct = false;
    while lo.time() < opts.t_max - 1e-12 {
        let prev_lo = lo.values().to_vec();
        let prev_hi = hi.values().to_vec();
        lo.advance(per_chunk)?;
        hi.advance(per_chunk)?;
        let moved = max_abs_diff(&prev_lo, lo.values()).max(max_abs_diff(&prev_hi, hi.values()));
        let prev_gap = gap;
        gap = max_abs_diff(lo.values(), hi.values());
        if moved < opts.tol {
            if gap <= 2.0 * opts.tol {
                converged = true;
                break;
            }
            if (prev_gap - gap).abs() < 0.01 * opts.tol {
                distinct = true;
                break;
            }
        }
    }
    let lower = lo.profile();
    let upper = hi.profile();
    let mid = lower
        .values
        .iter()
        .zip(&upper.values)
        .map(|(a, b)| [0, 1, 2].map(|k| 0.5 * (a[k] + b[k])))
        .collect();
    Ok(StationaryOutcome {
        profile: Profile::new(grid.clone(), mid)?,
        converged,
        distinct_limits: distinct,
        time: lo.time(),
        gap,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{BoundaryData, ModelParams};
    use crate::pde::grid::Grid;
    use crate::pde::solver::regime_from_theta;

    #[test]
    fn extinction_data_gives_extinction_profile() {
        let p = ModelParams::new(1.0, 0.75, 0.25, 1.0, 0.0, 0.0).unwrap();
        let g = Grid::line(40).unwrap();
        let e = p.extinction_state();
        let pr = PdeProblem::new(
            g.clone(),
            p,
            regime_from_theta(0.0, 0.0).unwrap(),
            BoundaryData::constant(e),
        )
        .unwrap();
        let out = stationary_solve(&pr, 1e-6, 500.0).unwrap();
        assert!(out.converged);
        assert!(
            out.profile
                .linf_distance(&Profile::constant(&g, e).unwrap())
                .unwrap()
                < 1e-6
        );
    }

    #[test]
    fn rejects_bad_tolerance() {
        let p = ModelParams::new(1.0, 0.75, 0.25, 1.0, 0.0, 0.0).unwrap();
        let pr =
            PdeProblem::from_params(Grid::line(10).unwrap(), p, BoundaryData::constant([0.1; 3]))
                .unwrap();
        assert!(stationary_solve(&pr, 0.0, 10.0).is_err());
    }
}
