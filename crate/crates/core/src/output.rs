//! On-disk layout of a finished (or stopped) run:
//!
//! ```text
//! DIR/stats.csv
//! DIR/config.json
//! DIR/population/rank_000.stencil   fittest first
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evolution::{EvoConfig, RunStats};
use crate::fitness::Evaluator;
use crate::io::document::{save_stencil, Provenance, StencilDocument, FILE_EXTENSION};
use crate::stencil::Stencil;

pub fn rank_file_name(rank: usize) -> String {
    format!("rank_{rank:03}.{FILE_EXTENSION}")
}

/// Document for one population member, solved for every target character.
pub fn population_document(
    stencil: &Stencil,
    evaluator: &Evaluator,
    config: &EvoConfig,
    generation: usize,
) -> StencilDocument {
    let mut solved = stencil.clone();
    evaluator.solve_missing(&mut solved);
    StencilDocument::from_stencil(
        &solved,
        config.render,
        Some(config.fitness.variant),
        Some(Provenance {
            seed: config.rng_seed,
            generation,
            config_digest: config.digest(),
        }),
    )
}

/// Writes stats, config and the ranked population below `dir`.
pub fn write_run(
    dir: &Path,
    config: &EvoConfig,
    stats: &RunStats,
    population: &[Stencil],
    evaluator: &Evaluator,
    generation: usize,
) -> Result<Vec<PathBuf>> {
    let pop_dir = dir.join("population");
    fs::create_dir_all(&pop_dir).map_err(|e| Error::io(&pop_dir, e))?;
    let mut written = Vec::with_capacity(population.len() + 2);
    let stats_path = dir.join("stats.csv");
    fs::write(&stats_path, stats.to_csv()).map_err(|e| Error::io(&stats_path, e))?;
    written.push(stats_path);
    let config_path = dir.join("config.json");
    let config_json = serde_json::to_string_pretty(config).expect("config serializes") + "\n";
    fs::write(&config_path, config_json).map_err(|e| Error::io(&config_path, e))?;
    written.push(config_path);
    for (rank, stencil) in population.iter().enumerate() {
        let path = pop_dir.join(rank_file_name(rank));
        save_stencil(&population_document(stencil, evaluator, config, generation), &path)?;
        written.push(path);
    }
    Ok(written)
}
