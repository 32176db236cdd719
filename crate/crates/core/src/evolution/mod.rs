//! Genetic algorithm over stencils.

pub mod config;
pub mod engine;
pub mod operators;
pub mod stats;

pub use config::{EvoConfig, MutationConfig};
pub use engine::{evolve, slot_rng, Evolution, GenerationSnapshot};
pub use stats::{GenerationRecord, RunStats, CSV_HEADER};
