//! Multi-seed experiment suites and their mean curves.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evolution::{evolve, EvoConfig, RunStats, CSV_HEADER};
use crate::fitness::{Evaluator, FitnessConfig, FitnessVariant};
use crate::shared::{shared_elements_for, SharedElementMatrix};
use crate::stencil::Stencil;
use crate::targets::TargetSet;

/// One finished run of a suite.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub seed: u64,
    pub stats: RunStats,
    /// Fittest final stencil, solved for every target character.
    pub best: Stencil,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub runs: Vec<SuiteRun>,
}

impl SuiteOutcome {
    /// Run holding the fittest final stencil; earliest seed on ties.
    pub fn best_run(&self) -> &SuiteRun {
        self.runs
            .iter()
            .reduce(|a, b| if b.best.fitness > a.best.fitness { b } else { a })
            .expect("suite has at least one run")
    }

    pub fn aggregate_csv(&self) -> Result<String> {
        let stats: Vec<&RunStats> = self.runs.iter().map(|r| &r.stats).collect();
        aggregate_csv(&stats)
    }

    pub fn shared_elements(&self, targets: &TargetSet) -> Result<SharedElementMatrix> {
        shared_elements_for(&self.best_run().best, targets.characters())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-generation means over runs, in the column layout of a single run's
/// `stats.csv`. Subset columns average the runs that report them; the boost
/// column becomes the fraction of runs with boost active.
pub fn aggregate_csv(runs: &[&RunStats]) -> Result<String> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidConfig("aggregate needs at least one run".into()))?;
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(Error::InvalidConfig("runs have different generation counts".into()));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for g in 0..first.len() {
        let rows: Vec<_> = runs.iter().map(|r| &r.generations[g]).collect();
        let m = |f: &dyn Fn(&crate::evolution::GenerationRecord) -> f64| {
            mean(rows.iter().map(|r| f(r))).expect("non-empty")
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            rows[0].generation,
            m(&|r| r.best_fitness),
            m(&|r| r.mean_fitness),
            m(&|r| r.best_element_count as f64),
            m(&|r| r.mean_element_count),
            opt(mean(rows.iter().filter_map(|r| r.mean_l_score))),
            opt(mean(rows.iter().filter_map(|r| r.mean_non_l_score))),
            m(&|r| r.population_similarity),
            m(&|r| f64::from(u8::from(r.boost_active))),
        );
    }
    Ok(out)
}

/// Runs `runs` evolutions with seeds `seed_base..seed_base + runs` under
/// `variant`, everything else taken from `base`. `on_run` sees each run as it
/// finishes.
pub fn run_suite(
    base: &EvoConfig,
    variant: FitnessVariant,
    runs: usize,
    seed_base: u64,
    targets: &TargetSet,
    threads: Option<usize>,
    mut on_run: impl FnMut(&SuiteRun),
) -> Result<SuiteOutcome> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let fitness = FitnessConfig {
        variant,
        ..base.fitness.clone()
    };
    let mut out = Vec::with_capacity(runs);
    for r in 0..runs as u64 {
        let config = EvoConfig {
            rng_seed: seed_base + r,
            fitness: fitness.clone(),
            ..base.clone()
        };
        let evaluator = Evaluator::new(targets.clone(), config.render, config.search, config.fitness.clone())?;
        let (population, stats) = evolve(config, targets.clone(), threads, |_| {})?;
        let mut best = population.into_iter().next().expect("non-empty population");
        evaluator.solve_missing(&mut best);
        let run = SuiteRun {
            seed: seed_base + r,
            stats,
            best,
        };
        on_run(&run);
        out.push(run);
    }
    Ok(SuiteOutcome { runs: out })
}
