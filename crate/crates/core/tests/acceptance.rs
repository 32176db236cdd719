//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod support;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use stencilforge::evolution::operators::{area_crossover, mutate};
use stencilforge::experiments::{run_suite, SuiteOutcome};
use stencilforge::fitness::{reduce_gaps, reduce_size};
use stencilforge::io::{load_stencil, save_stencil, Provenance, StencilDocument};
use stencilforge::search::hillclimb_mask;
use stencilforge::shared::shared_elements_for;
use stencilforge::stencil::{is_valid, random_stencil};
use stencilforge::targets::builtin_alphabet;
use stencilforge::{
    Bounds, EvoConfig, Evaluator, FitnessConfig, FitnessVariant, GridSpec, MutationConfig, SearchConfig, Segment,
    Stencil,
};

const SEEDS: u64 = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn greedy_oracle() -> Outcome {
    let start = Instant::now();
    let config = EvoConfig::default();
    let targets = builtin_alphabet(config.render.canvas_size);
    let search = SearchConfig::default();
    let mut r = rng(0x5eed);
    let mut mismatches = 0;
    let mut first = String::new();
    for case in 0..200 {
        let stencil = random_stencil(config.grid, Bounds { min: 1, max: 12 }, &mut r).unwrap();
        for (c, target) in targets.iter() {
            let got = hillclimb_mask(&stencil, c, target, &config.render, &search).unwrap();
            let (mask, score, alternatives) =
                support::reference_hillclimb(&stencil, target, &config.render, search.top_k);
            let same = got.best_mask == mask
                && got.best_score.to_bits() == score.to_bits()
                && got.alternatives.len() == alternatives.len()
                && got
                    .alternatives
                    .iter()
                    .zip(&alternatives)
                    .all(|((m1, s1), (m2, s2))| m1 == m2 && s1.to_bits() == s2.to_bits());
            if !same {
                mismatches += 1;
                if first.is_empty() {
                    first = format!("; first at stencil {case} char {c}");
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(120),
        format!("200 stencils x {} chars, {mismatches} mismatches{first}, {elapsed:.1?}", targets.len()),
    )
}

fn penalty_bounds() -> Outcome {
    let config = FitnessConfig::default();
    let (sf, gf) = (config.size_floor, config.gaps_floor);
    let grid = GridSpec::default();
    let bounds = Bounds::default();
    let mut r = rng(2);
    let mut out_of_range = 0;
    for _ in 0..10_000 {
        let s = random_stencil(grid, bounds, &mut r).unwrap();
        let size = reduce_size(&s, sf);
        let gaps = reduce_gaps(&s, gf);
        if !(0.95..=1.0).contains(&size) || !(0.975..=1.0).contains(&gaps) {
            out_of_range += 1;
        }
    }

    // Endpoint witnesses built by hand.
    let fill = |n: usize| -> Stencil {
        let segs = (0..n as i32).map(|i| Segment::new(i % 10, i / 10, i % 10, i / 10 + 1)).collect::<Vec<_>>();
        Stencil::new(grid, bounds, segs).unwrap()
    };
    let small = bounds.min;
    let big = bounds.max;
    let wide = Bounds { min: 1, max: 40 };
    let apart = Stencil::new(grid, wide, vec![Segment::new(0, 0, 2, 0), Segment::new(0, 5, 2, 5)]).unwrap();
    let triangle = Stencil::new(
        grid,
        wide,
        vec![Segment::new(0, 0, 4, 0), Segment::new(4, 0, 0, 4), Segment::new(0, 4, 0, 0)],
    )
    .unwrap();
    let endpoints = [
        reduce_size(&fill(small), sf) == 1.0,
        reduce_size(&fill(big), sf) == 0.95,
        reduce_gaps(&apart, gf) == 0.975,
        reduce_gaps(&triangle, gf) == 1.0,
    ];
    outcome(
        out_of_range == 0 && endpoints.iter().all(|&e| e),
        format!("10000 stencils, {out_of_range} out of range; endpoints attained {endpoints:?}"),
    )
}

struct Suites {
    exp1: SuiteOutcome,
    exp2: SuiteOutcome,
    exp3: SuiteOutcome,
}

fn run_suites() -> Suites {
    let base = EvoConfig::default();
    let targets = builtin_alphabet(base.render.canvas_size);
    let suite = |variant: FitnessVariant| {
        let start = Instant::now();
        let out = run_suite(&base, variant, SEEDS as usize, 1, &targets, None, |run| {
            eprintln!(
                "  {variant:?} seed {} best {:.4} elements {}",
                run.seed,
                run.stats.last().unwrap().best_fitness,
                run.stats.last().unwrap().best_element_count
            );
        })
        .unwrap();
        eprintln!("  {variant:?} suite took {:.0?}", start.elapsed());
        out
    };
    Suites {
        exp1: suite(FitnessVariant::Exp1),
        exp2: suite(FitnessVariant::Exp2),
        exp3: suite(FitnessVariant::Exp3),
    }
}

fn mean_final_elements(suite: &SuiteOutcome) -> f64 {
    let total: usize = suite.runs.iter().map(|r| r.stats.last().unwrap().best_element_count).sum();
    total as f64 / suite.runs.len() as f64
}

fn monotone(s: &Suites) -> Outcome {
    let mut bad = Vec::new();
    for (name, suite) in [("exp1", &s.exp1), ("exp2", &s.exp2), ("exp3", &s.exp3)] {
        for run in &suite.runs {
            let series = run.stats.best_fitness_series();
            if series.windows(2).any(|w| w[1] < w[0]) {
                bad.push(format!("{name}/seed {}", run.seed));
            }
        }
    }
    outcome(bad.is_empty(), format!("{} runs checked, decreasing: {bad:?}", 3 * SEEDS))
}

fn element_reduction(s: &Suites) -> Outcome {
    let (e1, e2) = (mean_final_elements(&s.exp1), mean_final_elements(&s.exp2));
    let reduction = 1.0 - e2 / e1;
    outcome(
        reduction >= 0.15,
        format!("mean final elements exp1 {e1:.1}, exp2 {e2:.1}, reduction {:.1}%", 100.0 * reduction),
    )
}

fn fitness_level(s: &Suites) -> Outcome {
    let best: Vec<f64> = s.exp1.runs.iter().map(|r| r.stats.last().unwrap().best_fitness).collect();
    let hits = best.iter().filter(|&&b| b >= 0.60).count();
    outcome(hits >= 4, format!("{hits}/5 seeds reach 0.60; best {best:.4?}"))
}

fn transfer(s: &Suites) -> Outcome {
    let mut rising = 0;
    let mut pairs = Vec::new();
    for run in &s.exp3.runs {
        let first = run.stats.generations.first().unwrap().mean_non_l_score.unwrap();
        let last = run.stats.last().unwrap().mean_non_l_score.unwrap();
        if last > first {
            rising += 1;
        }
        pairs.push(format!("{first:.4}->{last:.4}"));
    }
    outcome(rising >= 4, format!("{rising}/5 seeds rise; non-L mean {}", pairs.join(" ")))
}

fn parsimony(s: &Suites) -> Outcome {
    let (e1, e2, e3) = (
        mean_final_elements(&s.exp1),
        mean_final_elements(&s.exp2),
        mean_final_elements(&s.exp3),
    );
    outcome(e3 <= e2 && e2 < e1, format!("exp3 {e3:.1} <= exp2 {e2:.1} < exp1 {e1:.1}"))
}

fn validity_closure() -> Outcome {
    let grid = GridSpec::default();
    let bounds = Bounds::default();
    let mutation = MutationConfig::default();
    let aggressive = MutationConfig { p_delete: 1.0, p_modify: 1.0, p_insert: 1.0, per_segment_rate: 0.5 };
    let mut r = rng(8);
    let mut invalid = 0;
    let ok = |s: &Stencil| is_valid(s) && bounds.contains(s.len());
    for i in 0..10_000 {
        let a = random_stencil(grid, bounds, &mut r).unwrap();
        if i % 2 == 0 {
            let b = random_stencil(grid, bounds, &mut r).unwrap();
            let (c, d) = area_crossover(&a, &b, &mut r);
            invalid += usize::from(!ok(&c)) + usize::from(!ok(&d));
        } else {
            let config = if i % 4 == 1 { &mutation } else { &aggressive };
            let boost = if r.random_bool(0.5) { 1.0 } else { 3.0 };
            invalid += usize::from(!ok(&mutate(&a, config, boost, &mut r)));
        }
    }
    outcome(invalid == 0, format!("10000 applications, {invalid} invalid offspring"))
}

fn evolve_digest(dir: &Path, threads: usize) -> String {
    let status = Command::new(env!("CARGO_BIN_EXE_stencilforge"))
        .args(["evolve", "--pop", "100", "--gens", "40", "--seed", "9", "--fitness", "exp2", "--out"])
        .arg(dir)
        .env("STENCILFORGE_THREADS", threads.to_string())
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success(), "evolve failed");
    hex::encode(Sha256::digest(std::fs::read(dir.join("stats.csv")).unwrap()))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let a = evolve_digest(&tmp.path().join("a"), 1);
    let b = evolve_digest(&tmp.path().join("b"), 1);
    let c = evolve_digest(&tmp.path().join("c"), 4);
    outcome(a == b && b == c, format!("stats.csv sha256 {} / {} / {} (threads 1, 1, 4)", &a[..12], &b[..12], &c[..12]))
}

fn round_trip() -> Outcome {
    let config = EvoConfig::default();
    let targets = builtin_alphabet(config.render.canvas_size);
    let evaluator =
        Evaluator::new(targets.clone(), config.render, config.search, FitnessConfig::default()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let mut r = rng(10);
    let (mut lossy, mut csv_mismatch) = (0, 0);
    for i in 0..100 {
        let mut stencil = evaluator.evaluate(random_stencil(config.grid, config.bounds, &mut r).unwrap());
        evaluator.solve_missing(&mut stencil);
        let provenance = r.random_bool(0.5).then(|| Provenance {
            seed: r.random(),
            generation: r.random_range(0..1000),
            config_digest: format!("{:016x}", r.random::<u64>()),
        });
        let doc = StencilDocument::from_stencil(&stencil, config.render, Some(FitnessVariant::Exp1), provenance);
        let path = tmp.path().join(format!("{i}.stencil"));
        save_stencil(&doc, &path).unwrap();
        let loaded = load_stencil(&path).unwrap();
        let back = loaded.to_stencil().unwrap();
        if loaded != doc || StencilDocument::from_json(&doc.to_json()).unwrap() != doc || back.segments != stencil.segments
            || back.solutions != stencil.solutions
        {
            lossy += 1;
        }
        let chars = targets.characters();
        let csv = shared_elements_for(&stencil, chars).unwrap().to_csv();
        if csv != support::shared_csv_oracle(&stencil, chars) {
            csv_mismatch += 1;
        }
    }
    outcome(
        lossy == 0 && csv_mismatch == 0,
        format!("100 documents, {lossy} lossy; {csv_mismatch} shared-element CSV mismatches"),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    record("greedy-oracle equivalence", greedy_oracle());
    record("penalty bounds", penalty_bounds());
    record("validity closure", validity_closure());
    record("determinism", determinism());
    record("round-trip", round_trip());

    eprintln!("running 3 suites x {SEEDS} seeds (pop 100, 300 generations)");
    let suites = run_suites();
    record("elitist monotonicity", monotone(&suites));
    record("exp2 element-count reduction", element_reduction(&suites));
    record("exp1 fitness level", fitness_level(&suites));
    record("exp3 transfer", transfer(&suites));
    record("exp3 parsimony ordering", parsimony(&suites));

    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
