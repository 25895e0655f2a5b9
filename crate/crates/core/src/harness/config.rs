use std::path::Path;

use serde::{Deserialize, Serialize};

use super::catalog::TestFunction;
use crate::error::{Error, Result};
use crate::lattice::Face;
use crate::params::{BoundaryData, ModelParams};
use crate::pde::{clamp_to_simplex, untransform, BoundaryRegime, Grid, Profile};
use crate::spectral::{delta1, Delta1Choice};

/// Reservoir densities: explicit per face, or a named preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant {
        left: [f64; 3],
        right: [f64; 3],
    },
    /// `extinction` or `standard`.
    Preset(String),
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Preset("standard".into())
    }
}

/// Asymmetric face data used by the default experiments.
pub const STANDARD_LEFT: [f64; 3] = [0.3, 0.2, 0.1];
pub const STANDARD_RIGHT: [f64; 3] = [0.1, 0.4, 0.05];

impl BoundarySpec {
    pub fn resolve(&self, p: &ModelParams) -> Result<BoundaryData> {
        let (l, r) = match self {
            BoundarySpec::Constant { left, right } => (*left, *right),
            BoundarySpec::Preset(name) => match name.as_str() {
                "extinction" => (p.extinction_state(), p.extinction_state()),
                "standard" => (STANDARD_LEFT, STANDARD_RIGHT),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown boundary preset `{other}`"
                    )))
                }
            },
        };
        BoundaryData::check_value(l)?;
        BoundaryData::check_value(r)?;
        Ok(BoundaryData::faces(l, r))
    }
}

/// Initial density profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Constant([f64; 3]),
    /// Constant given as `(rho1, rho1 + rho3, 1 - rho2 - rho3)`.
    Transformed([f64; 3]),
    /// Linear along axis 1 between the two end values.
    Linear {
        left: [f64; 3],
        right: [f64; 3],
    },
    /// `extinction`, `all-wild` or `all-sterile`.
    Preset(String),
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Linear {
            left: [0.5, 0.1, 0.1],
            right: [0.1, 0.3, 0.2],
        }
    }
}

/// Closed-form initial profile on the axis interval `interval`.
pub type InitialFn = Box<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>;

impl InitialSpec {
    pub fn resolve(&self, p: &ModelParams, interval: (f64, f64)) -> Result<InitialFn> {
        let checked = |v: [f64; 3]| -> Result<[f64; 3]> {
            clamp_to_simplex(v).map_err(|_| {
                Error::InvalidConfig(format!("initial value {v:?} outside the simplex"))
            })
        };
        Ok(match self {
            InitialSpec::Constant(v) => {
                let v = checked(*v)?;
                Box::new(move |_| v)
            }
            InitialSpec::Transformed(q) => {
                let v = checked(untransform(*q))?;
                Box::new(move |_| v)
            }
            InitialSpec::Linear { left, right } => {
                let (l, r) = (checked(*left)?, checked(*right)?);
                let (a, c) = interval;
                Box::new(move |u| {
                    let s = ((u[0] - a) / (c - a)).clamp(0.0, 1.0);
                    [0, 1, 2].map(|k| l[k] + s * (r[k] - l[k]))
                })
            }
            InitialSpec::Preset(name) => {
                let v = match name.as_str() {
                    "extinction" => p.extinction_state(),
                    "all-wild" => [1.0, 0.0, 0.0],
                    "all-sterile" => [0.0, 1.0, 0.0],
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown initial preset `{other}`"
                        )))
                    }
                };
                Box::new(move |_| v)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub interval: (f64, f64),
    /// Cells along axis 1 (points minus one).
    pub cells: usize,
    /// Points per torus direction; one entry per extra dimension.
    pub torus_points: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            interval: (-1.0, 1.0),
            cells: 200,
            torus_points: Vec::new(),
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.interval, self.cells + 1, self.torus_points.clone())
    }
}

/// Choice of the smallest Dirichlet eigenvalue for the second condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta1Spec {
    SineFamily,
    HalfMode,
    Value(f64),
}

impl Default for Delta1Spec {
    fn default() -> Self {
        Delta1Spec::SineFamily
    }
}

impl Delta1Spec {
    pub fn value(&self, d: usize) -> f64 {
        match *self {
            Delta1Spec::SineFamily => delta1(d, Delta1Choice::SineFamily),
            Delta1Spec::HalfMode => delta1(d, Delta1Choice::HalfMode),
            Delta1Spec::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Text,
    Binary,
}

/// Everything one experiment needs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub dim: usize,
    pub boundary: BoundarySpec,
    pub initial: InitialSpec,
    pub lattice_sizes: Vec<usize>,
    pub grid: GridSpec,
    /// PDE step; `None` uses the automatic stable step.
    pub dt: Option<f64>,
    /// Must agree with the regime implied by the thetas when given.
    pub regime: Option<BoundaryRegime>,
    pub t_end: f64,
    /// Empty means `[t_end]`.
    pub snapshot_times: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    /// Catalog names; empty means the whole catalog.
    pub test_functions: Vec<String>,
    /// Hydrostatic burn-in before time averaging.
    pub burn_in: f64,
    /// Hydrostatic averaging window.
    pub window: f64,
    /// Block radius as a fraction of `N` (floored).
    pub block_fraction: f64,
    pub tol: f64,
    pub t_max: f64,
    pub delta1: Delta1Spec,
    /// Largest number of sites solved exactly by the hydrostatic check.
    pub exact_site_cap: usize,
    pub snapshot_format: SnapshotFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: ModelParams {
                diffusion: 1.0,
                lambda1: 0.75,
                lambda2: 0.25,
                release: 1.0,
                theta_left: 0.5,
                theta_right: 1.0,
                exchange_multiplier: 1.0,
            },
            dim: 1,
            boundary: BoundarySpec::default(),
            initial: InitialSpec::default(),
            lattice_sizes: vec![50, 100, 200],
            grid: GridSpec::default(),
            dt: None,
            regime: None,
            t_end: 1.0,
            snapshot_times: Vec::new(),
            replicas: 32,
            seed: 1,
            test_functions: Vec::new(),
            burn_in: 10.0,
            window: 50.0,
            block_fraction: 0.0,
            tol: 1e-6,
            t_max: 1000.0,
            delta1: Delta1Spec::default(),
            exact_site_cap: 8,
            snapshot_format: SnapshotFormat::Text,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.params
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.dim == 0 {
            return bad("dim must be at least 1".into());
        }
        if self.grid.torus_points.len() + 1 != self.dim {
            return bad(format!(
                "grid has {} torus directions, expected {}",
                self.grid.torus_points.len(),
                self.dim - 1
            ));
        }
        self.grid
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.lattice_sizes.is_empty() || self.lattice_sizes.contains(&0) {
            return bad("lattice_sizes must be non-empty and positive".into());
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self
            .snapshot_times
            .iter()
            .any(|&s| !(0.0..=self.t_end).contains(&s))
        {
            return bad("snapshot times must lie in [0, t_end]".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        for name in &self.test_functions {
            if TestFunction::by_name(name).is_none() {
                return bad(format!("unknown test function `{name}`"));
            }
        }
        if !(self.burn_in >= 0.0 && self.window > 0.0) {
            return bad("burn_in must be >= 0 and window > 0".into());
        }
        if !(0.0..1.0).contains(&self.block_fraction) {
            return bad("block_fraction must lie in [0, 1)".into());
        }
        if !(self.tol > 0.0 && self.t_max > 0.0) {
            return bad("tol and t_max must be positive".into());
        }
        if let Delta1Spec::Value(v) = self.delta1 {
            if !(v > 0.0) {
                return bad("delta1 must be positive".into());
            }
        }
        let b = self
            .boundary
            .resolve(&self.params)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for face in [Face::Left, Face::Right] {
            BoundaryData::check_value(b.eval(face, &[]))
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        let _ = self.initial.resolve(&self.params, self.grid.interval)?;
        Ok(())
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.snapshot_times.is_empty() {
            vec![self.t_end]
        } else {
            self.snapshot_times.clone()
        }
    }

    pub fn test_functions(&self) -> Vec<TestFunction> {
        if self.test_functions.is_empty() {
            TestFunction::catalog().to_vec()
        } else {
            self.test_functions
                .iter()
                .map(|n| TestFunction::by_name(n).expect("validated"))
                .collect()
        }
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        self.boundary.resolve(&self.params)
    }

    pub fn initial_profile(&self) -> Result<Profile> {
        let f = self.initial.resolve(&self.params, self.grid.interval)?;
        Profile::from_fn(&self.grid.build()?, |u| f(u))
    }

    pub fn block_radius(&self, n: usize) -> usize {
        (self.block_fraction * n as f64).floor() as usize
    }
}
