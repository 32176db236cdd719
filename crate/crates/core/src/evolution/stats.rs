use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Column order of [`RunStats::to_csv`].
pub const CSV_HEADER: &str = "generation,best_fitness,mean_fitness,best_element_count,\
mean_element_count,mean_l_score,mean_non_l_score,population_similarity,boost_active";

/// Metrics of one completed generation. Subset scores are taken from the
/// fittest stencil: the mean best score over the evaluated subset `L` and
/// over the remaining characters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_element_count: usize,
    pub mean_element_count: f64,
    pub mean_l_score: Option<f64>,
    pub mean_non_l_score: Option<f64>,
    pub population_similarity: f64,
    /// Whether this population's similarity triggers boosted mutation for
    /// its offspring.
    pub boost_active: bool,
}

impl GenerationRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.generation,
            self.best_fitness,
            self.mean_fitness,
            self.best_element_count,
            self.mean_element_count,
            opt(self.mean_l_score),
            opt(self.mean_non_l_score),
            self.population_similarity,
            u8::from(self.boost_active)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub generations: Vec<GenerationRecord>,
}

impl RunStats {
    pub fn push(&mut self, record: GenerationRecord) {
        self.generations.push(record);
    }

    pub fn len(&self) -> usize {
        self.generations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generations.is_empty()
    }

    pub fn last(&self) -> Option<&GenerationRecord> {
        self.generations.last()
    }

    pub fn best_fitness_series(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.best_fitness).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for g in &self.generations {
            let _ = writeln!(out, "{}", g.csv_row());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut stats = RunStats::default();
        stats.push(GenerationRecord {
            generation: 0,
            best_fitness: 0.5,
            mean_fitness: 0.25,
            best_element_count: 12,
            mean_element_count: 20.5,
            mean_l_score: Some(0.75),
            mean_non_l_score: None,
            population_similarity: 0.0,
            boost_active: false,
        });
        assert_eq!(
            stats.to_csv(),
            format!("{CSV_HEADER}\n0,0.5,0.25,12,20.5,0.75,,0,0\n")
        );
    }
}
