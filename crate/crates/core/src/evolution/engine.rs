//! Generational loop: elitism, tournament selection, area crossover and
//! similarity-boosted mutation.
//!
//! Randomness comes from one seed. Every breeding slot draws from its own
//! ChaCha stream keyed by `(generation, slot)`, so the run does not depend on
//! how evaluation is scheduled across threads, and a run can be paused and
//! resumed at any generation boundary without extra state.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::EvoConfig;
use super::operators::{area_crossover, mutate, population_similarity};
use super::stats::{GenerationRecord, RunStats};
use crate::error::{Error, Result};
use crate::fitness::Evaluator;
use crate::stencil::{random_stencil, Stencil};
use crate::targets::TargetSet;

/// Random stream for one breeding slot.
pub fn slot_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

/// Immutable view of one completed generation.
#[derive(Debug, Clone)]
pub struct GenerationSnapshot {
    pub generation: usize,
    /// Ranked by descending fitness.
    pub population: Arc<Vec<Stencil>>,
    pub record: GenerationRecord,
}

/// Index of the tournament winner. Ties go to the first drawn.
fn tournament<R: Rng + ?Sized>(population: &[Stencil], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..population.len());
    for _ in 1..size {
        let i = rng.random_range(0..population.len());
        if population[i].fitness > population[best].fitness {
            best = i;
        }
    }
    best
}

fn rank(population: &mut [Stencil]) {
    population.sort_by(|a, b| {
        let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
        let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
        fb.total_cmp(&fa)
    });
}

pub struct Evolution {
    config: EvoConfig,
    evaluator: Arc<Evaluator>,
    pool: Option<Arc<rayon::ThreadPool>>,
    generation: usize,
    population: Arc<Vec<Stencil>>,
    stats: RunStats,
    boost: f64,
}

impl Evolution {
    /// Seeds and evaluates generation 0 on the global rayon pool.
    pub fn new(config: EvoConfig, targets: TargetSet) -> Result<Self> {
        Self::with_threads(config, targets, None)
    }

    /// Like [`Evolution::new`], evaluating on a dedicated pool of `threads`
    /// workers when given.
    pub fn with_threads(config: EvoConfig, targets: TargetSet, threads: Option<usize>) -> Result<Self> {
        config.validate()?;
        let evaluator = Evaluator::new(targets, config.render, config.search, config.fitness.clone())?;
        let pool = match threads {
            Some(n) => Some(Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?,
            )),
            None => None,
        };
        let seeds = (0..config.population_size)
            .map(|slot| random_stencil(config.grid, config.bounds, &mut slot_rng(config.rng_seed, 0, slot)))
            .collect::<Result<Vec<_>>>()?;
        let mut evo = Evolution {
            config,
            evaluator: Arc::new(evaluator),
            pool,
            generation: 0,
            population: Arc::new(Vec::new()),
            stats: RunStats::default(),
            boost: 1.0,
        };
        let population = evo.evaluate_all(seeds);
        evo.install(population);
        Ok(evo)
    }

    pub fn config(&self) -> &EvoConfig {
        &self.config
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Stencil] {
        &self.population
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn is_finished(&self) -> bool {
        self.generation >= self.config.generations
    }

    pub fn snapshot(&self) -> GenerationSnapshot {
        GenerationSnapshot {
            generation: self.generation,
            population: Arc::clone(&self.population),
            record: self.stats.last().expect("generation recorded").clone(),
        }
    }

    fn evaluate_all(&self, stencils: Vec<Stencil>) -> Vec<Stencil> {
        let evaluator = &self.evaluator;
        let run = move || {
            stencils
                .into_par_iter()
                .map(|s| {
                    if s.fitness.is_some() {
                        s
                    } else {
                        evaluator.evaluate(s)
                    }
                })
                .collect()
        };
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }

    /// Ranks a freshly evaluated population and records its statistics.
    fn install(&mut self, mut population: Vec<Stencil>) {
        rank(&mut population);
        let similarity = population_similarity(&population).expect("population has >= 2 members");
        self.boost = if similarity >= self.config.similarity_threshold {
            self.config.boost_factor
        } else {
            1.0
        };
        let n = population.len() as f64;
        let mean_fitness = population.iter().filter_map(|s| s.fitness).sum::<f64>() / n;
        let mean_elements = population.iter().map(|s| s.len() as f64).sum::<f64>() / n;

        let mut best = population[0].clone();
        self.evaluator.solve_missing(&mut best);
        let fitness_config = self.evaluator.fitness_config();
        let (mut l_sum, mut l_n, mut o_sum, mut o_n) = (0.0, 0usize, 0.0, 0usize);
        for &c in self.evaluator.targets().characters() {
            let score = best.solutions[&c].best_score;
            if fitness_config.in_subset(c) {
                l_sum += score;
                l_n += 1;
            } else {
                o_sum += score;
                o_n += 1;
            }
        }
        let mean = |sum: f64, n: usize| (n > 0).then(|| sum / n as f64);

        self.stats.push(GenerationRecord {
            generation: self.generation,
            best_fitness: best.fitness.expect("evaluated"),
            mean_fitness,
            best_element_count: best.len(),
            mean_element_count: mean_elements,
            mean_l_score: mean(l_sum, l_n),
            mean_non_l_score: mean(o_sum, o_n),
            population_similarity: similarity,
            boost_active: self.boost > 1.0,
        });
        self.population = Arc::new(population);
    }

    /// Breeds, evaluates and records the next generation.
    pub fn step(&mut self) {
        let next_generation = self.generation + 1;
        let cfg = &self.config;
        let parents = &self.population;
        let elite = cfg.elite_count;
        let mut next: Vec<Stencil> = parents[..elite].to_vec();
        let mut slot = 0;
        while next.len() < cfg.population_size {
            let mut rng = slot_rng(cfg.rng_seed, next_generation, slot);
            slot += 1;
            let a = &parents[tournament(parents, cfg.tournament_size, &mut rng)];
            let b = &parents[tournament(parents, cfg.tournament_size, &mut rng)];
            let (ca, cb) = if rng.random_bool(cfg.crossover_prob) {
                area_crossover(a, b, &mut rng)
            } else {
                (a.clone(), b.clone())
            };
            next.push(mutate(&ca, &cfg.mutation, self.boost, &mut rng));
            if next.len() < cfg.population_size {
                next.push(mutate(&cb, &cfg.mutation, self.boost, &mut rng));
            }
        }
        let evaluated = self.evaluate_all(next);
        self.generation = next_generation;
        self.install(evaluated);
    }
}

/// Runs `config.generations` generations, calling `observer` after each one
/// (including generation 0).
pub fn evolve(
    config: EvoConfig,
    targets: TargetSet,
    threads: Option<usize>,
    mut observer: impl FnMut(&GenerationSnapshot),
) -> Result<(Vec<Stencil>, RunStats)> {
    let mut evo = Evolution::with_threads(config, targets, threads)?;
    observer(&evo.snapshot());
    while !evo.is_finished() {
        evo.step();
        observer(&evo.snapshot());
    }
    let population = evo.population.as_ref().clone();
    Ok((population, evo.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::is_valid;
    use crate::targets::builtin_alphabet;

    fn small_config(seed: u64) -> EvoConfig {
        EvoConfig {
            population_size: 12,
            generations: 6,
            rng_seed: seed,
            ..Default::default()
        }
    }

    #[test]
    fn zero_generations_returns_initial_population() {
        let cfg = EvoConfig { generations: 0, ..small_config(1) };
        let mut calls = 0;
        let (pop, stats) = evolve(cfg, builtin_alphabet(64), None, |_| calls += 1).unwrap();
        assert_eq!(pop.len(), 12);
        assert_eq!(stats.len(), 1);
        assert_eq!(calls, 1);
        assert!(pop.iter().all(|s| s.fitness.is_some()));
    }

    #[test]
    fn elitism_and_validity_hold() {
        let (pop, stats) = evolve(small_config(2), builtin_alphabet(64), None, |snap| {
            assert!(snap.population.iter().all(is_valid));
            let f: Vec<f64> = snap.population.iter().map(|s| s.fitness.unwrap()).collect();
            assert!(f.windows(2).all(|w| w[0] >= w[1]));
        })
        .unwrap();
        assert_eq!(stats.len(), 7);
        assert!(stats.best_fitness_series().windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(pop[0].fitness, Some(stats.last().unwrap().best_fitness));
    }

    #[test]
    fn identical_seeds_give_identical_runs() {
        let run = |threads| evolve(small_config(3), builtin_alphabet(64), threads, |_| {}).unwrap();
        let (pa, sa) = run(None);
        let (pb, sb) = run(Some(1));
        let (pc, sc) = run(Some(3));
        assert_eq!(sa.to_csv(), sb.to_csv());
        assert_eq!(sa.to_csv(), sc.to_csv());
        assert_eq!(pa, pb);
        assert_eq!(pa, pc);
    }

    #[test]
    fn stepping_matches_evolve() {
        let cfg = small_config(4);
        let (_, whole) = evolve(cfg.clone(), builtin_alphabet(64), None, |_| {}).unwrap();
        let mut evo = Evolution::new(cfg, builtin_alphabet(64)).unwrap();
        while !evo.is_finished() {
            evo.step();
        }
        assert_eq!(evo.stats(), &whole);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = EvoConfig { population_size: 0, ..Default::default() };
        assert!(Evolution::new(cfg, builtin_alphabet(64)).is_err());
        let cfg = EvoConfig {
            render: crate::raster::RenderSettings { canvas_size: 32, stroke_weight: 3.0 },
            ..small_config(1)
        };
        assert!(matches!(
            Evolution::new(cfg, builtin_alphabet(64)),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn identical_population_triggers_boost() {
        let cfg = EvoConfig {
            population_size: 4,
            generations: 0,
            bounds: crate::stencil::Bounds { min: 1, max: 1 },
            grid: crate::stencil::GridSpec { density: 2 },
            render: crate::raster::RenderSettings { canvas_size: 16, stroke_weight: 2.0 },
            fitness: crate::fitness::FitnessConfig {
                evaluated_subset: vec![],
                ..Default::default()
            },
            similarity_threshold: 0.0,
            ..Default::default()
        };
        let evo = Evolution::new(cfg, builtin_alphabet(16)).unwrap();
        assert!(evo.stats().last().unwrap().boost_active);
    }
}
