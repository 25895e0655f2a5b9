//! Particle engine: rates, exact event simulation and the exhaustive
//! generator oracle.

pub mod engine;
pub mod generator;
pub mod rates;
pub mod tree;

pub use engine::{run, run_with_snapshots, Event, EventRecord, Simulator, Trajectory};
pub use generator::{
    generator_matrix, stationary_distribution, GeneratorMatrix, DEFAULT_STATE_CAP,
};
pub use rates::{boundary_rates, contact_rates, exchange_rate, Mechanisms, Move, RateTable};
