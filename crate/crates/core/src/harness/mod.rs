//! Experiments linking the particle system to the PDE, and their output.

mod appendix;
mod catalog;
mod config;
mod hydro;
mod hydrostatic;
mod report;

pub use appendix::{
    reproduce_appendix_b, reproduce_appendix_b_with, AppendixReport, AppendixRun, AppendixSettings,
    COINCIDE_BELOW, DIFFER_ABOVE,
};
pub use catalog::TestFunction;
pub use config::{
    BoundarySpec, Delta1Spec, ExperimentConfig, GridSpec, InitialSpec, SnapshotFormat,
    STANDARD_LEFT, STANDARD_RIGHT,
};
pub use hydro::{
    clearly_above, derive_seed, dispatch_regime, hydrodynamic_check, initial_sample,
    sample_product, HydroReport, HydroRow,
};
pub use hydrostatic::{
    exact_marginals, hydrostatic_check, HydrostaticReport, HydrostaticRow, MarginalSource,
};
pub use report::{emit, reload, Report, RunInfo, Table, MANIFEST_NAME};
