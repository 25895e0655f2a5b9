use serde::{Deserialize, Serialize};

use super::report::{Report, Table};
use crate::error::Result;
use crate::params::{BoundaryData, ModelParams};
use crate::pde::{check_conditions, regime_from_theta, Grid, PdeProblem, Profile};
use crate::spectral::{delta1, Delta1Choice};

/// Horizon of the reference runs.
pub const HORIZON: f64 = 100.0;
pub const CELLS: usize = 100;
/// Step count of the reference runs; it implies `dt = 2e-4`.
pub const REFERENCE_STEPS: usize = 500_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixRun {
    pub label: String,
    pub params: ModelParams,
    pub first_condition: bool,
    /// Step actually used.
    pub dt: f64,
    pub steps: usize,
    /// Step implied by the reference step count.
    pub reference_dt: f64,
    pub stability_bound: f64,
    /// L-infinity gap between the two final profiles in `(rho1, rho2, rho3)`.
    pub gap: f64,
    /// Same in `(rho1, T, R)`.
    pub gap_transformed: f64,
    /// Started from transformed `(0,0,0)`, i.e. all sterile.
    pub lower: Profile,
    /// Started from transformed `(1,1,1)`, i.e. all wild.
    pub upper: Profile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixReport {
    pub runs: Vec<AppendixRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixSettings {
    pub horizon: f64,
    pub cells: usize,
    /// Requested step; tightened to the stability bound when larger.
    pub dt: f64,
}

impl Default for AppendixSettings {
    fn default() -> Self {
        AppendixSettings {
            horizon: HORIZON,
            cells: CELLS,
            dt: HORIZON / REFERENCE_STEPS as f64,
        }
    }
}

fn run_pair(label: &str, lambda1: f64, lambda2: f64, s: &AppendixSettings) -> Result<AppendixRun> {
    // Both faces insulated: theta > 1 on each side.
    let params = ModelParams::new(1.0, lambda1, lambda2, 1.0, 2.0, 2.0)?;
    let grid = Grid::new((0.0, 1.0), s.cells + 1, Vec::new())?;
    let problem = PdeProblem::new(
        grid.clone(),
        params,
        regime_from_theta(2.0, 2.0)?,
        BoundaryData::constant([0.0; 3]),
    )?;
    let bound = problem.stability_bound();
    let dt = if s.dt <= bound {
        s.dt
    } else {
        problem.auto_dt()
    };
    let lower0 = Profile::from_transformed(&grid, |_| [0.0; 3])?;
    let upper0 = Profile::from_transformed(&grid, |_| [1.0; 3])?;
    let (lo, hi) = rayon::join(
        || problem.solve(&lower0, s.horizon, dt, &[]),
        || problem.solve(&upper0, s.horizon, dt, &[]),
    );
    let (lo, hi) = (lo?, hi?);
    Ok(AppendixRun {
        label: label.into(),
        params,
        first_condition: check_conditions(&params, 1, delta1(1, Delta1Choice::SineFamily))?.h1,
        dt: lo.dt,
        steps: lo.steps,
        reference_dt: s.dt,
        stability_bound: bound,
        gap: lo.final_profile.linf_distance(&hi.final_profile)?,
        gap_transformed: lo
            .final_profile
            .linf_distance_transformed(&hi.final_profile)?,
        lower: lo.final_profile,
        upper: hi.final_profile,
    })
}

/// The two reference parameter sets, each solved from both extremal
/// constants on `[0, 1]` with insulated faces.
pub fn reproduce_appendix_b() -> Result<AppendixReport> {
    reproduce_appendix_b_with(&AppendixSettings::default())
}

pub fn reproduce_appendix_b_with(s: &AppendixSettings) -> Result<AppendixReport> {
    let (a, b) = rayon::join(
        || run_pair("run1", 0.75, 0.25, s),
        || run_pair("run2", 1.0, 0.75, s),
    );
    Ok(AppendixReport { runs: vec![a?, b?] })
}

/// Gap below which the two limits count as equal.
pub const COINCIDE_BELOW: f64 = 1e-2;
/// Gap above which the two limits count as distinct.
pub const DIFFER_ABOVE: f64 = 0.05;

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.runs[0].gap < COINCIDE_BELOW && self.runs[1].gap > DIFFER_ABOVE
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new("appendix-b");
        r.passed = Some(self.passed());
        let mut summary = Table::new(
            "summary",
            &[
                "run",
                "lambda1",
                "lambda2",
                "first_condition",
                "gap",
                "gap_transformed",
                "dt",
                "steps",
                "reference_dt",
                "stability_bound",
            ],
        );
        for (i, run) in self.runs.iter().enumerate() {
            summary.push(vec![
                (i + 1) as f64,
                run.params.lambda1,
                run.params.lambda2,
                if run.first_condition { 1.0 } else { 0.0 },
                run.gap,
                run.gap_transformed,
                run.dt,
                run.steps as f64,
                run.reference_dt,
                run.stability_bound,
            ]);
            let mut t = Table::new(
                &run.label,
                &[
                    "x",
                    "lower_rho1",
                    "lower_T",
                    "lower_R",
                    "upper_rho1",
                    "upper_T",
                    "upper_R",
                ],
            );
            let lo = run.lower.transformed();
            let hi = run.upper.transformed();
            for n in 0..run.lower.grid.node_count() {
                t.push(vec![
                    run.lower.grid.coords(n)[0],
                    lo[n][0],
                    lo[n][1],
                    lo[n][2],
                    hi[n][0],
                    hi[n][1],
                    hi[n][2],
                ]);
            }
            r.tables.push(t);
            r.set(&format!("{}_gap", run.label), run.gap);
            if run.dt != run.reference_dt {
                r.set(
                    &format!("{}_note", run.label),
                    format!(
                        "reference step {} exceeds the stability bound {}; used {} over {} steps",
                        run.reference_dt, run.stability_bound, run.dt, run.steps
                    ),
                );
            }
        }
        r.tables.insert(0, summary);
        r
    }
}
