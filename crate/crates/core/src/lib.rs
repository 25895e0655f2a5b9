//! Simulation and verification suite for the sterile insect generalized
//! contact process with stirring and slow boundary reservoirs, and for its
//! reaction-diffusion hydrodynamic equations.

pub mod error;
pub mod harness;
pub mod kmc;
pub mod lattice;
pub mod measures;
pub mod params;
pub mod pde;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{Configuration, Face, Lattice, State};
pub use params::{BoundaryData, ModelParams};
