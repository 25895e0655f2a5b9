use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the particle engine, the PDE solver and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("site {0:?} is outside the lattice")]
    SiteOutOfRange(Vec<i64>),

    #[error("site index {0} is outside the lattice")]
    IndexOutOfRange(usize),

    #[error("invalid state value {0} (expected 0..=3)")]
    InvalidState(u8),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid density profile: {0}")]
    InvalidProfile(String),

    #[error("site {0} is not on a boundary face")]
    NotBoundarySite(usize),

    #[error("absorbing configuration: total rate is zero")]
    Absorbing,

    #[error("system too large: {states} states exceeds cap {cap}")]
    TooLarge { states: usize, cap: usize },

    #[error("generator is reducible: {0}")]
    Reducible(String),

    #[error(
        "stationary solver did not converge (residual {residual:e} after {iterations} sweeps)"
    )]
    NoConvergence { residual: f64, iterations: usize },

    #[error("state {i} and state {j} must differ")]
    SameStates { i: u8, j: u8 },

    #[error("point {0:?} lies outside the simplex")]
    OutOfSimplex([f64; 3]),

    #[error("time step {dt} violates the stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("non-finite value at node {node} after {step} steps")]
    NotFinite { node: usize, step: usize },

    #[error("simplex drift {drift:e} at node {node} after {step} steps")]
    SimplexDrift {
        node: usize,
        step: usize,
        drift: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid eigenfunction index {0:?}")]
    InvalidIndex(Vec<usize>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("boundary regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("hydrostatic check refused: {0}")]
    Refused(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
