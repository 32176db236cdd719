use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fitness::FitnessConfig;
use crate::raster::RenderSettings;
use crate::search::SearchConfig;
use crate::stencil::{Bounds, GridSpec};

/// Probabilities of the three mutation procedures, applied independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MutationConfig {
    pub p_delete: f64,
    pub p_modify: f64,
    pub p_insert: f64,
    /// Chance that each segment is picked when modification fires. At least
    /// one segment is always modified.
    pub per_segment_rate: f64,
}

impl MutationConfig {
    /// Procedure probabilities scaled by `boost` and capped at 1.
    pub fn boosted(&self, boost: f64) -> MutationConfig {
        MutationConfig {
            p_delete: (self.p_delete * boost).min(1.0),
            p_modify: (self.p_modify * boost).min(1.0),
            p_insert: (self.p_insert * boost).min(1.0),
            per_segment_rate: self.per_segment_rate,
        }
    }

    pub fn none() -> Self {
        MutationConfig {
            p_delete: 0.0,
            p_modify: 0.0,
            p_insert: 0.0,
            per_segment_rate: 0.0,
        }
    }
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            p_delete: 0.1,
            p_modify: 0.9,
            p_insert: 0.1,
            per_segment_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvoConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub elite_count: usize,
    pub crossover_prob: f64,
    pub mutation: MutationConfig,
    /// Mean pairwise Jaccard similarity at which mutation is boosted.
    pub similarity_threshold: f64,
    pub boost_factor: f64,
    pub rng_seed: u64,
    pub grid: GridSpec,
    pub bounds: Bounds,
    pub render: RenderSettings,
    pub search: SearchConfig,
    pub fitness: FitnessConfig,
}

impl Default for EvoConfig {
    fn default() -> Self {
        EvoConfig {
            population_size: 100,
            generations: 300,
            tournament_size: 3,
            elite_count: 1,
            crossover_prob: 0.9,
            mutation: MutationConfig::default(),
            similarity_threshold: 0.6,
            boost_factor: 3.0,
            rng_seed: 0,
            grid: GridSpec::default(),
            bounds: Bounds::default(),
            render: RenderSettings::default(),
            search: SearchConfig::default(),
            fitness: FitnessConfig::default(),
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be in [0, 1], got {p}")))
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            )));
        }
        if self.elite_count >= self.population_size {
            return Err(Error::InvalidConfig(format!(
                "elite_count ({}) must be smaller than population_size ({})",
                self.elite_count, self.population_size
            )));
        }
        if self.tournament_size == 0 {
            return Err(Error::InvalidConfig("tournament_size must be at least 1".into()));
        }
        check_probability("crossover_prob", self.crossover_prob)?;
        check_probability("p_delete", self.mutation.p_delete)?;
        check_probability("p_modify", self.mutation.p_modify)?;
        check_probability("p_insert", self.mutation.p_insert)?;
        check_probability("per_segment_rate", self.mutation.per_segment_rate)?;
        check_probability("similarity_threshold", self.similarity_threshold)?;
        if !(self.boost_factor >= 1.0 && self.boost_factor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "boost_factor must be >= 1, got {}",
                self.boost_factor
            )));
        }
        GridSpec::new(self.grid.density)?;
        Bounds::new(self.bounds.min, self.bounds.max)?;
        self.bounds.check_feasible(&self.grid)?;
        self.render.validate()?;
        SearchConfig::new(self.search.top_k)?;
        Ok(())
    }

    /// Short content hash identifying this configuration.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}
