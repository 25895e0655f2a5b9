use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{clamp_to_simplex, simplex_violation, Grid, Profile, SIMPLEX_TOL};
use super::reaction::{reaction_unchecked, Reaction};
use crate::error::{Error, Result};
use crate::lattice::Face;
use crate::params::{BoundaryData, ModelParams};

/// Macroscopic boundary condition on one face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceCondition {
    Dirichlet,
    Robin,
    Neumann,
}

impl FaceCondition {
    /// `[0,1)` gives Dirichlet, `1` Robin and `(1, inf)` Neumann.
    pub fn from_theta(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "theta must be >= 0, got {theta}"
            )));
        }
        Ok(if theta < 1.0 {
            FaceCondition::Dirichlet
        } else if theta == 1.0 {
            FaceCondition::Robin
        } else {
            FaceCondition::Neumann
        })
    }

    pub fn letter(self) -> &'static str {
        match self {
            FaceCondition::Dirichlet => "D",
            FaceCondition::Robin => "R",
            FaceCondition::Neumann => "Ne",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryRegime {
    pub left: FaceCondition,
    pub right: FaceCondition,
}

impl BoundaryRegime {
    pub fn new(left: FaceCondition, right: FaceCondition) -> Self {
        BoundaryRegime { left, right }
    }

    pub fn face(&self, face: Face) -> FaceCondition {
        match face {
            Face::Left => self.left,
            Face::Right => self.right,
        }
    }

    /// Short label such as `(D;R)`.
    pub fn label(&self) -> String {
        format!("({};{})", self.left.letter(), self.right.letter())
    }
}

pub fn regime_from_theta(theta_left: f64, theta_right: f64) -> Result<BoundaryRegime> {
    Ok(BoundaryRegime {
        left: FaceCondition::from_theta(theta_left)?,
        right: FaceCondition::from_theta(theta_right)?,
    })
}

/// Fraction of the stability bound used when the time step is chosen automatically.
pub const DEFAULT_SAFETY: f64 = 0.9;

/// The reaction-diffusion system on a grid with its boundary data.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub grid: Grid,
    pub params: ModelParams,
    pub regime: BoundaryRegime,
    pub boundary: BoundaryData,
    pub reaction: Reaction,
    /// On a left Robin face use `-d/dx1 rho = (b - rho) / D`, the mirror of the
    /// right face. When false the left face uses `+d/dx1`.
    pub mirrored_left_robin: bool,
    face_values: [Vec<[f64; 3]>; 2],
}

impl PdeProblem {
    pub fn new(
        grid: Grid,
        params: ModelParams,
        regime: BoundaryRegime,
        boundary: BoundaryData,
    ) -> Result<Self> {
        params.validate()?;
        let slice = grid.slice_len();
        let mut face_values = [Vec::with_capacity(slice), Vec::with_capacity(slice)];
        for (k, face) in [Face::Left, Face::Right].into_iter().enumerate() {
            for t in 0..slice {
                let b = boundary.eval(face, &grid.transverse(t));
                BoundaryData::check_value(b)?;
                face_values[k].push(b);
            }
        }
        Ok(PdeProblem {
            grid,
            params,
            regime,
            boundary,
            reaction: Reaction::Model,
            mirrored_left_robin: true,
            face_values,
        })
    }

    /// Regime taken from the boundary exponents in `params`.
    pub fn from_params(grid: Grid, params: ModelParams, boundary: BoundaryData) -> Result<Self> {
        let regime = regime_from_theta(params.theta_left, params.theta_right)?;
        PdeProblem::new(grid, params, regime, boundary)
    }

    pub fn with_reaction(mut self, reaction: Reaction) -> Self {
        self.reaction = reaction;
        self
    }

    pub fn with_mirrored_left_robin(mut self, mirrored: bool) -> Self {
        self.mirrored_left_robin = mirrored;
        self
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn diffusion(&self) -> f64 {
        self.params.effective_diffusion()
    }

    /// Boundary value at slice `t` of a face.
    pub fn face_value(&self, face: Face, t: usize) -> [f64; 3] {
        self.face_values[face as usize][t]
    }

    /// `1 / (2 D sum_k h_k^-2)`, the explicit-Euler stability bound.
    pub fn stability_bound(&self) -> f64 {
        let mut inv = 1.0 / self.grid.h().powi(2);
        for (k, &m) in self.grid.torus_points.iter().enumerate() {
            if m > 1 {
                inv += 1.0 / self.grid.torus_h(k).powi(2);
            }
        }
        1.0 / (2.0 * self.diffusion() * inv)
    }

    pub fn auto_dt(&self) -> f64 {
        DEFAULT_SAFETY * self.stability_bound()
    }

    pub fn check_dt(&self, dt: f64) -> Result<()> {
        let bound = self.stability_bound();
        if !(dt > 0.0 && dt <= bound) {
            return Err(Error::Cfl { dt, bound });
        }
        Ok(())
    }

    fn check_grid(&self, u: &Profile) -> Result<()> {
        if u.grid != self.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                u.grid, self.grid
            )));
        }
        Ok(())
    }

    /// Ghost value beyond a Robin or Neumann face.
    #[inline]
    fn ghost(&self, face: Face, inner: [f64; 3], here: [f64; 3], t: usize) -> [f64; 3] {
        match self.regime.face(face) {
            FaceCondition::Neumann => inner,
            FaceCondition::Robin => {
                let b = self.face_value(face, t);
                let c = 2.0 * self.grid.h() / self.diffusion();
                let c = if face == Face::Left && !self.mirrored_left_robin {
                    -c
                } else {
                    c
                };
                [0, 1, 2].map(|k| inner[k] + c * (b[k] - here[k]))
            }
            FaceCondition::Dirichlet => unreachable!("Dirichlet faces are pinned"),
        }
    }

    #[inline]
    fn update_node(&self, u: &[[f64; 3]], node: usize, dt: f64) -> [f64; 3] {
        let g = &self.grid;
        let (a, t) = g.split(node);
        let slice = g.slice_len();
        let last = g.axis_points - 1;
        let face = if a == 0 {
            Some(Face::Left)
        } else if a == last {
            Some(Face::Right)
        } else {
            None
        };
        if let Some(f) = face {
            if self.regime.face(f) == FaceCondition::Dirichlet {
                return self.face_value(f, t);
            }
        }
        let here = u[node];
        let (left, right) = match face {
            Some(Face::Left) => {
                let inner = u[node + slice];
                (self.ghost(Face::Left, inner, here, t), inner)
            }
            Some(Face::Right) => {
                let inner = u[node - slice];
                (inner, self.ghost(Face::Right, inner, here, t))
            }
            None => (u[node - slice], u[node + slice]),
        };
        let inv_h2 = 1.0 / (g.h() * g.h());
        let mut lap = [0, 1, 2].map(|k| (left[k] + right[k] - 2.0 * here[k]) * inv_h2);
        for (k, &m) in g.torus_points.iter().enumerate() {
            if m < 2 {
                continue;
            }
            let stride = g.torus_stride(k);
            let j = (t / stride) % m;
            let base = node - j * stride;
            let up = u[base + ((j + 1) % m) * stride];
            let down = u[base + ((j + m - 1) % m) * stride];
            let inv = (m * m) as f64;
            for c in 0..3 {
                lap[c] += (up[c] + down[c] - 2.0 * here[c]) * inv;
            }
        }
        let f = match self.reaction {
            Reaction::Model => reaction_unchecked(here, &self.params, self.dim()),
            Reaction::Zero => [0.0; 3],
        };
        let d = self.diffusion();
        [0, 1, 2].map(|k| here[k] + dt * (d * lap[k] + f[k]))
    }

    /// One explicit step from `u` into `out`. `step` only labels diagnostics.
    pub(crate) fn step_values(
        &self,
        u: &[[f64; 3]],
        out: &mut [[f64; 3]],
        dt: f64,
        step: usize,
    ) -> Result<()> {
        if out.len() >= 4096 {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(n, o)| *o = self.update_node(u, n, dt));
        } else {
            for (n, o) in out.iter_mut().enumerate() {
                *o = self.update_node(u, n, dt);
            }
        }
        for (node, v) in out.iter_mut().enumerate() {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NotFinite { node, step });
            }
            let drift = simplex_violation(*v);
            if drift > SIMPLEX_TOL {
                return Err(Error::SimplexDrift { node, step, drift });
            }
            if drift > 0.0 {
                *v = clamp_to_simplex(*v)?;
            }
        }
        Ok(())
    }

    pub fn euler_step(&self, u: &Profile, dt: f64) -> Result<Profile> {
        self.check_grid(u)?;
        self.check_dt(dt)?;
        let mut out = vec![[0.0; 3]; u.values.len()];
        self.step_values(&u.values, &mut out, dt, 1)?;
        Ok(Profile {
            grid: self.grid.clone(),
            values: out,
        })
    }

    pub fn integrator(&self, u0: &Profile, dt: f64) -> Result<Integrator<'_>> {
        self.check_grid(u0)?;
        self.check_dt(dt)?;
        Ok(Integrator {
            problem: self,
            scratch: vec![[0.0; 3]; u0.values.len()],
            u: u0.values.clone(),
            dt,
            steps: 0,
        })
    }

    /// Integrates to `t_end` with the largest step `<= dt` that divides
    /// `t_end`, recording the profile at each requested time (rounded to the
    /// nearest step).
    pub fn solve(
        &self,
        u0: &Profile,
        t_end: f64,
        dt: f64,
        snapshot_times: &[f64],
    ) -> Result<SolveOutput> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "time horizon must be >= 0, got {t_end}"
            )));
        }
        self.check_dt(dt)?;
        let steps = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
        let dt_eff = if steps == 0 { dt } else { t_end / steps as f64 };
        let mut marks: Vec<(usize, f64)> = Vec::new();
        for &s in snapshot_times {
            if !(0.0..=t_end).contains(&s) {
                return Err(Error::InvalidConfig(format!(
                    "snapshot time {s} outside [0, {t_end}]"
                )));
            }
            let k = if steps == 0 {
                0
            } else {
                (s / dt_eff).round() as usize
            };
            marks.push((k.min(steps), s));
        }
        marks.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut it = self.integrator(u0, dt_eff)?;
        let mut snapshots = Vec::with_capacity(marks.len());
        let mut next = 0;
        loop {
            while next < marks.len() && marks[next].0 == it.steps {
                snapshots.push((marks[next].1, it.profile()));
                next += 1;
            }
            if it.steps == steps {
                break;
            }
            it.step()?;
        }
        Ok(SolveOutput {
            dt: dt_eff,
            steps,
            t_end,
            snapshots,
            final_profile: it.profile(),
        })
    }
}

/// Explicit-Euler state of one run.
pub struct Integrator<'a> {
    problem: &'a PdeProblem,
    u: Vec<[f64; 3]>,
    scratch: Vec<[f64; 3]>,
    dt: f64,
    steps: usize,
}

impl Integrator<'_> {
    pub fn step(&mut self) -> Result<()> {
        self.problem
            .step_values(&self.u, &mut self.scratch, self.dt, self.steps + 1)?;
        std::mem::swap(&mut self.u, &mut self.scratch);
        self.steps += 1;
        Ok(())
    }

    pub fn advance(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.u
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn profile(&self) -> Profile {
        Profile {
            grid: self.problem.grid.clone(),
            values: self.u.clone(),
        }
    }
}

/// Result of [`PdeProblem::solve`].
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub dt: f64,
    pub steps: usize,
    pub t_end: f64,
    pub snapshots: Vec<(f64, Profile)>,
    pub final_profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub time: f64,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub dt: f64,
    pub steps: usize,
    pub t_end: f64,
    pub snapshots: Vec<SnapshotEntry>,
}

impl SolveOutput {
    /// Writes `{prefix}_NNNN.csv` per snapshot, `{prefix}_final.csv`, and
    /// `{prefix}_manifest.json` listing `(time, path)` with paths relative to
    /// `dir`.
    pub fn write(&self, dir: &Path, prefix: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::new();
        for (i, (t, p)) in self.snapshots.iter().enumerate() {
            let name = format!("{prefix}_{i:04}.csv");
            p.write_csv(&dir.join(&name))?;
            entries.push(SnapshotEntry {
                time: *t,
                path: name,
            });
        }
        self.final_profile
            .write_csv(&dir.join(format!("{prefix}_final.csv")))?;
        let manifest = SnapshotManifest {
            dt: self.dt,
            steps: self.steps,
            t_end: self.t_end,
            snapshots: entries,
        };
        let path = dir.join(format!("{prefix}_manifest.json"));
        let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
            path: path.clone(),
            source,
        })?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
