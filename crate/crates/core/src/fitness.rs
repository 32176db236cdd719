//! Stencil fitness: glyph quality averaged over the target set, optionally
//! scaled by the element-count and gap penalties.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RenderSettings;
use crate::search::{hillclimb_precomputed, SearchConfig, StencilInk, TargetCosts};
use crate::stencil::Stencil;
use crate::targets::TargetSet;

/// Subset evaluated under [`FitnessVariant::Exp3`] unless configured otherwise.
pub const DEFAULT_SUBSET: &str = "BIQVWX";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessVariant {
    /// Mean glyph score over all targets.
    Exp1,
    /// `Exp1` times the size and gap penalties.
    Exp2,
    /// `Exp2` with the mean restricted to the evaluated subset.
    Exp3,
}

impl fmt::Display for FitnessVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitnessVariant::Exp1 => "exp1",
            FitnessVariant::Exp2 => "exp2",
            FitnessVariant::Exp3 => "exp3",
        })
    }
}

impl FromStr for FitnessVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" => Ok(FitnessVariant::Exp1),
            "exp2" => Ok(FitnessVariant::Exp2),
            "exp3" => Ok(FitnessVariant::Exp3),
            _ => Err(Error::InvalidConfig(format!(
                "unknown fitness variant {s:?} (expected exp1, exp2 or exp3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitnessConfig {
    pub variant: FitnessVariant,
    /// The evaluated subset `L`. Also used to split run statistics into
    /// subset and non-subset scores under every variant.
    pub evaluated_subset: Vec<char>,
    pub size_floor: f64,
    pub gaps_floor: f64,
    /// Under `Exp3`, solve only the subset during evaluation; other characters
    /// are solved on demand (statistics, export).
    #[serde(default)]
    pub defer_unevaluated: bool,
}

impl FitnessConfig {
    pub fn new(variant: FitnessVariant) -> Self {
        FitnessConfig {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self, targets: &TargetSet) -> Result<()> {
        if !(self.size_floor > 0.0 && self.size_floor <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "size_floor must be in (0, 1], got {}",
                self.size_floor
            )));
        }
        if !(self.gaps_floor > 0.0 && self.gaps_floor <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gaps_floor must be in (0, 1], got {}",
                self.gaps_floor
            )));
        }
        for (i, c) in self.evaluated_subset.iter().enumerate() {
            if !targets.contains(*c) {
                return Err(Error::InvalidConfig(format!(
                    "subset character {c:?} is not in the target set"
                )));
            }
            if self.evaluated_subset[..i].contains(c) {
                return Err(Error::InvalidConfig(format!(
                    "subset character {c:?} listed twice"
                )));
            }
        }
        if self.variant == FitnessVariant::Exp3 && self.evaluated_subset.is_empty() {
            return Err(Error::InvalidConfig(
                "exp3 fitness needs a non-empty evaluated subset".into(),
            ));
        }
        Ok(())
    }

    pub fn in_subset(&self, c: char) -> bool {
        self.evaluated_subset.contains(&c)
    }
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            variant: FitnessVariant::Exp1,
            evaluated_subset: DEFAULT_SUBSET.chars().collect(),
            size_floor: 0.95,
            gaps_floor: 0.975,
            defer_unevaluated: false,
        }
    }
}

/// Mean best score over `chars`.
fn mean_score(stencil: &Stencil, chars: impl IntoIterator<Item = char>) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in chars {
        sum += stencil.solution(c)?.best_score;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidConfig("mean over an empty character set".into()));
    }
    Ok(sum / count as f64)
}

/// Mean glyph score over every target character.
pub fn fit_exp_1(stencil: &Stencil, targets: &TargetSet) -> Result<f64> {
    mean_score(stencil, targets.characters().iter().copied())
}

/// Linear in the segment count: 1 at `bounds.min`, `floor` at `bounds.max`.
pub fn reduce_size(stencil: &Stencil, floor: f64) -> f64 {
    let (lo, hi) = (stencil.bounds.min, stencil.bounds.max);
    if hi == lo {
        return 1.0;
    }
    let n = stencil.len().clamp(lo, hi);
    1.0 - (1.0 - floor) * (n - lo) as f64 / (hi - lo) as f64
}

/// Fraction of segment endpoints lying on some other segment.
pub fn endpoint_contact_ratio(stencil: &Stencil) -> f64 {
    if stencil.is_empty() {
        return 0.0;
    }
    let segs = &stencil.segments;
    let touching = segs
        .iter()
        .enumerate()
        .flat_map(|(i, s)| [(i, s.start()), (i, s.end())])
        .filter(|&(i, p)| {
            segs.iter()
                .enumerate()
                .any(|(j, other)| j != i && other.touches_point(p))
        })
        .count();
    touching as f64 / (2 * segs.len()) as f64
}

/// Linear in the endpoint contact ratio: `floor` at 0, 1 at 1.
pub fn reduce_gaps(stencil: &Stencil, floor: f64) -> f64 {
    floor + (1.0 - floor) * endpoint_contact_ratio(stencil)
}

pub fn fit_exp_2(stencil: &Stencil, targets: &TargetSet, config: &FitnessConfig) -> Result<f64> {
    Ok(fit_exp_1(stencil, targets)?
        * reduce_size(stencil, config.size_floor)
        * reduce_gaps(stencil, config.gaps_floor))
}

pub fn fit_exp_3(
    stencil: &Stencil,
    subset: &[char],
    config: &FitnessConfig,
) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig("exp3 subset is empty".into()));
    }
    Ok(mean_score(stencil, subset.iter().copied())?
        * reduce_size(stencil, config.size_floor)
        * reduce_gaps(stencil, config.gaps_floor))
}

/// Fitness of an already solved stencil under `config`.
pub fn fitness(stencil: &Stencil, targets: &TargetSet, config: &FitnessConfig) -> Result<f64> {
    match config.variant {
        FitnessVariant::Exp1 => fit_exp_1(stencil, targets),
        FitnessVariant::Exp2 => fit_exp_2(stencil, targets, config),
        FitnessVariant::Exp3 => {
            for c in &config.evaluated_subset {
                if !targets.contains(*c) {
                    return Err(Error::InvalidConfig(format!(
                        "subset character {c:?} is not in the target set"
                    )));
                }
            }
            fit_exp_3(stencil, &config.evaluated_subset, config)
        }
    }
}

/// Solves glyph masks and assigns fitness. Precomputes per-target error
/// tables once so it can be shared across a population.
#[derive(Debug, Clone)]
pub struct Evaluator {
    targets: TargetSet,
    costs: Vec<(char, TargetCosts)>,
    settings: RenderSettings,
    search: SearchConfig,
    fitness: FitnessConfig,
}

impl Evaluator {
    pub fn new(
        targets: TargetSet,
        settings: RenderSettings,
        search: SearchConfig,
        fitness: FitnessConfig,
    ) -> Result<Self> {
        settings.validate()?;
        SearchConfig::new(search.top_k)?;
        fitness.validate(&targets)?;
        if targets.canvas_size() != settings.canvas_size {
            return Err(Error::SizeMismatch {
                left: targets.canvas_size(),
                right: settings.canvas_size,
            });
        }
        let costs = targets
            .iter()
            .map(|(c, canvas)| (c, TargetCosts::new(canvas)))
            .collect();
        Ok(Evaluator {
            targets,
            costs,
            settings,
            search,
            fitness,
        })
    }

    pub fn targets(&self) -> &TargetSet {
        &self.targets
    }

    pub fn settings(&self) -> &RenderSettings {
        &self.settings
    }

    pub fn search_config(&self) -> &SearchConfig {
        &self.search
    }

    pub fn fitness_config(&self) -> &FitnessConfig {
        &self.fitness
    }

    /// Characters solved during [`Evaluator::evaluate`].
    fn evaluated_characters(&self) -> impl Iterator<Item = char> + '_ {
        let defer =
            self.fitness.variant == FitnessVariant::Exp3 && self.fitness.defer_unevaluated;
        self.targets
            .characters()
            .iter()
            .copied()
            .filter(move |c| !defer || self.fitness.in_subset(*c))
    }

    /// Solves every character lacking a solution; existing ones are kept.
    pub fn solve_missing(&self, stencil: &mut Stencil) {
        self.solve(stencil, self.targets.characters().iter().copied());
    }

    fn solve(&self, stencil: &mut Stencil, chars: impl Iterator<Item = char>) {
        let mut ink = None;
        for c in chars {
            if stencil.solutions.contains_key(&c) {
                continue;
            }
            let ink = ink.get_or_insert_with(|| StencilInk::new(stencil, &self.settings));
            let costs = &self
                .costs
                .iter()
                .find(|(ch, _)| *ch == c)
                .expect("character belongs to the target set")
                .1;
            let solution = hillclimb_precomputed(ink, costs, c, &self.search);
            stencil.solutions.insert(c, solution);
        }
    }

    /// Re-solves all evaluated characters and recomputes fitness.
    pub fn evaluate(&self, mut stencil: Stencil) -> Stencil {
        stencil.clear_evaluation();
        self.solve(&mut stencil, self.evaluated_characters());
        stencil.fitness = Some(
            fitness(&stencil, &self.targets, &self.fitness)
                .expect("evaluated characters cover the fitness inputs"),
        );
        stencil
    }
}

/// Convenience wrapper building a one-off [`Evaluator`].
pub fn evaluate_stencil(
    stencil: Stencil,
    targets: &TargetSet,
    settings: &RenderSettings,
    search: &SearchConfig,
    fitness: &FitnessConfig,
) -> Result<Stencil> {
    let evaluator = Evaluator::new(targets.clone(), *settings, *search, fitness.clone())?;
    Ok(evaluator.evaluate(stencil))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{render, Canvas};
    use crate::stencil::{random_stencil, Bounds, GlyphMask, GlyphSolution, GridSpec, Segment};
    use crate::targets::builtin_alphabet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn stencil(bounds: (usize, usize), segs: &[(i32, i32, i32, i32)]) -> Stencil {
        Stencil {
            grid: GridSpec { density: 10 },
            bounds: Bounds {
                min: bounds.0,
                max: bounds.1,
            },
            segments: segs
                .iter()
                .map(|&(a, b, c, d)| Segment::new(a, b, c, d))
                .collect(),
            solutions: BTreeMap::new(),
            fitness: None,
        }
    }

    fn with_scores(mut s: Stencil, scores: &[(char, f64)]) -> Stencil {
        for &(c, score) in scores {
            s.solutions.insert(
                c,
                GlyphSolution {
                    character: c,
                    best_mask: GlyphMask::empty(s.len()),
                    best_score: score,
                    alternatives: vec![(GlyphMask::empty(s.len()), score)],
                },
            );
        }
        s
    }

    fn blank_targets(chars: &str) -> TargetSet {
        TargetSet::new(chars.chars().map(|c| (c, Canvas::white(64))).collect()).unwrap()
    }

    #[test]
    fn fit_exp_1_is_mean_of_best_scores() {
        let s = with_scores(stencil((1, 40), &[(0, 0, 9, 0)]), &[('A', 1.0), ('B', 0.5)]);
        assert_eq!(fit_exp_1(&s, &blank_targets("AB")).unwrap(), 0.75);
        let s = with_scores(stencil((1, 40), &[(0, 0, 9, 0)]), &[('A', 1.0), ('B', 1.0)]);
        assert_eq!(fit_exp_1(&s, &blank_targets("AB")).unwrap(), 1.0);
        assert!(matches!(
            fit_exp_1(&s, &blank_targets("ABC")),
            Err(Error::MissingSolution('C'))
        ));
    }

    #[test]
    fn reduce_size_endpoints_and_midpoint() {
        let segs: Vec<(i32, i32, i32, i32)> = (0..9).map(|i| (i, 0, i, 9)).collect();
        assert_eq!(reduce_size(&stencil((1, 9), &segs[..1]), 0.95), 1.0);
        assert_eq!(reduce_size(&stencil((1, 9), &segs), 0.95), 0.95);
        assert!((reduce_size(&stencil((1, 9), &segs[..5]), 0.95) - 0.975).abs() < 1e-15);
        assert_eq!(reduce_size(&stencil((3, 3), &segs[..3]), 0.95), 1.0);
    }

    #[test]
    fn reduce_gaps_endpoints() {
        // closed square: every endpoint is shared with a neighbour
        let square = stencil((1, 40), &[(0, 0, 4, 0), (4, 0, 4, 4), (0, 4, 4, 4), (0, 0, 0, 4)]);
        assert_eq!(endpoint_contact_ratio(&square), 1.0);
        assert_eq!(reduce_gaps(&square, 0.975), 1.0);
        // parallel bars never touch
        let bars = stencil((1, 40), &[(0, 0, 4, 0), (0, 2, 4, 2)]);
        assert_eq!(reduce_gaps(&bars, 0.975), 0.975);
        // T junction: stem's top endpoint lies inside the bar
        let tee = stencil((1, 40), &[(0, 0, 4, 0), (2, 0, 2, 5)]);
        assert_eq!(endpoint_contact_ratio(&tee), 0.25);
    }

    #[test]
    fn fit_exp_2_examples() {
        let config = FitnessConfig::new(FitnessVariant::Exp2);
        let targets = blank_targets("A");
        let square = stencil((4, 10), &[(0, 0, 4, 0), (4, 0, 4, 4), (0, 4, 4, 4), (0, 0, 0, 4)]);
        let s = with_scores(square.clone(), &[('A', 1.0)]);
        assert_eq!(fit_exp_2(&s, &targets, &config).unwrap(), 1.0);

        let bars = stencil((1, 2), &[(0, 0, 4, 0), (0, 2, 4, 2)]);
        let s = with_scores(bars.clone(), &[('A', 0.8)]);
        assert!((fit_exp_2(&s, &targets, &config).unwrap() - 0.741).abs() < 1e-12);

        let s = with_scores(bars, &[('A', 0.0)]);
        assert_eq!(fit_exp_2(&s, &targets, &config).unwrap(), 0.0);
    }

    #[test]
    fn fit_exp_3_uses_only_the_subset() {
        let targets = builtin_alphabet(64);
        let mut config = FitnessConfig::new(FitnessVariant::Exp3);
        let base = stencil((1, 40), &[(0, 0, 9, 0), (0, 2, 9, 2)]);
        let scores: Vec<(char, f64)> = targets
            .characters()
            .iter()
            .map(|&c| (c, if "BIQ".contains(c) { 1.0 } else { 0.0 }))
            .collect();
        let s = with_scores(base.clone(), &scores);
        let penalty = reduce_size(&s, 0.95) * reduce_gaps(&s, 0.975);
        assert_eq!(fit_exp_3(&s, &config.evaluated_subset, &config).unwrap(), 0.5 * penalty);

        // perturbing non-subset scores leaves the value unchanged
        let perturbed: Vec<(char, f64)> = scores
            .iter()
            .map(|&(c, v)| (c, if config.in_subset(c) { v } else { 0.37 }))
            .collect();
        let p = with_scores(base.clone(), &perturbed);
        assert_eq!(
            fitness(&p, &targets, &config).unwrap(),
            fitness(&s, &targets, &config).unwrap()
        );

        // full subset degenerates to exp2
        config.evaluated_subset = targets.characters().to_vec();
        assert_eq!(
            fit_exp_3(&s, &config.evaluated_subset, &config).unwrap(),
            fit_exp_2(&s, &targets, &config).unwrap()
        );
        assert!(fit_exp_3(&s, &[], &config).is_err());
    }

    #[test]
    fn single_character_exact_glyph_scores_one() {
        let s = stencil((1, 40), &[(0, 0, 9, 0), (4, 0, 4, 9), (0, 9, 9, 9)]);
        let settings = RenderSettings::default();
        let target = render(&s, &GlyphMask::from_indices(3, [0, 1]).unwrap(), &settings).unwrap();
        let targets = TargetSet::new(vec![('T', target)]).unwrap();
        let config = FitnessConfig {
            evaluated_subset: vec![],
            ..FitnessConfig::new(FitnessVariant::Exp1)
        };
        let out = evaluate_stencil(s, &targets, &settings, &SearchConfig::default(), &config).unwrap();
        assert_eq!(out.fitness, Some(1.0));
    }

    #[test]
    fn exp3_still_solves_every_character() {
        let targets = builtin_alphabet(64);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_stencil(GridSpec::default(), Bounds::default(), &mut rng).unwrap();
        let config = FitnessConfig::new(FitnessVariant::Exp3);
        let settings = RenderSettings::default();
        let out = evaluate_stencil(s.clone(), &targets, &settings, &SearchConfig::default(), &config)
            .unwrap();
        assert_eq!(out.solutions.len(), 26);
        let mean_l: f64 = "BIQVWX".chars().map(|c| out.solutions[&c].best_score).sum::<f64>() / 6.0;
        let expected = mean_l * reduce_size(&out, 0.95) * reduce_gaps(&out, 0.975);
        assert_eq!(out.fitness, Some(expected));

        // determinism
        let again = evaluate_stencil(s.clone(), &targets, &settings, &SearchConfig::default(), &config)
            .unwrap();
        assert_eq!(out, again);

        // deferred mode solves only the subset, with identical fitness
        let deferred = FitnessConfig {
            defer_unevaluated: true,
            ..config
        };
        let out2 = evaluate_stencil(s, &targets, &settings, &SearchConfig::default(), &deferred)
            .unwrap();
        assert_eq!(out2.solutions.len(), 6);
        assert_eq!(out2.fitness, out.fitness);
    }

    #[test]
    fn config_validation() {
        let targets = blank_targets("AB");
        let mut c = FitnessConfig::new(FitnessVariant::Exp3);
        assert!(c.validate(&targets).is_err());
        c.evaluated_subset = vec!['A'];
        assert!(c.validate(&targets).is_ok());
        c.evaluated_subset = vec![];
        assert!(c.validate(&targets).is_err());
        c.variant = FitnessVariant::Exp1;
        assert!(c.validate(&targets).is_ok());
        c.size_floor = 0.0;
        assert!(c.validate(&targets).is_err());
        assert_eq!("EXP2".parse::<FitnessVariant>().unwrap(), FitnessVariant::Exp2);
        assert!("exp4".parse::<FitnessVariant>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn penalties_within_floors(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_stencil(GridSpec::default(), Bounds::default(), &mut rng).unwrap();
                let size = reduce_size(&s, 0.95);
                let gaps = reduce_gaps(&s, 0.975);
                prop_assert!((0.95..=1.0).contains(&size));
                prop_assert!((0.975..=1.0).contains(&gaps));
            }

            #[test]
            fn exp2_never_exceeds_exp1(seed in any::<u64>()) {
                let targets = builtin_alphabet(64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let s = random_stencil(GridSpec::default(), Bounds::default(), &mut rng).unwrap();
                let config = FitnessConfig::new(FitnessVariant::Exp2);
                let out = evaluate_stencil(s, &targets, &RenderSettings::default(), &SearchConfig::default(), &config).unwrap();
                let f1 = fit_exp_1(&out, &targets).unwrap();
                let f2 = fit_exp_2(&out, &targets, &config).unwrap();
                prop_assert!(f2 <= f1);
                prop_assert_eq!(f2, fit_exp_2(&out, &targets, &config).unwrap());
                for sol in out.solutions.values() {
                    // the empty mask is always evaluated, so the best can't be worse
                    let empty = crate::raster::glyph_score(&out, &GlyphMask::empty(out.len()), targets.get(sol.character).unwrap(), &RenderSettings::default()).unwrap();
                    prop_assert!(sol.best_score >= empty);
                }
            }
        }
    }
}
