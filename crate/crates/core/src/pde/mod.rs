//! The macroscopic reaction-diffusion system and its explicit-Euler solver.

mod compare;
mod grid;
mod reaction;
mod solver;
mod stationary;
mod weak;

pub use compare::{
    check_conditions, comparison_check, ConditionReport, OrderViolation, ORDER_SLACK,
};
pub use grid::{
    clamp_to_simplex, simplex_violation, transform, untransform, Grid, Profile, SIMPLEX_TOL,
};
pub use reaction::{reaction, reaction_transformed, Reaction};
pub use solver::{
    regime_from_theta, BoundaryRegime, FaceCondition, Integrator, PdeProblem, SnapshotEntry,
    SnapshotManifest, SolveOutput, DEFAULT_SAFETY,
};
pub use stationary::{
    stationary_solve, stationary_solve_with, StationaryOptions, StationaryOutcome,
};
pub use weak::weak_residual;
