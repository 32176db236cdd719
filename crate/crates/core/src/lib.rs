//! Evolution of type stencils.
//!
//! A stencil is a set of line segments on a square grid. Each character of a
//! target alphabet is drawn by activating a subset of the segments; a greedy
//! search picks that subset, and a genetic algorithm evolves the stencils.

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod fitness;
pub mod io;
pub mod output;
pub mod raster;
pub mod search;
#[cfg(feature = "service")]
pub mod service;
pub mod shared;
pub mod stencil;
pub mod targets;

pub use error::{Error, Result};
pub use evolution::{evolve, EvoConfig, Evolution, MutationConfig, RunStats};
pub use fitness::{Evaluator, FitnessConfig, FitnessVariant};
pub use raster::{Canvas, RenderSettings};
pub use search::SearchConfig;
pub use stencil::{Bounds, GlyphMask, GlyphSolution, GridSpec, Segment, Stencil};
pub use targets::TargetSet;
