//! Variation operators. All of them return valid stencils: a change that
//! would break validity is resampled a bounded number of times and then
//! dropped.

use rand::Rng;

use super::config::MutationConfig;
use crate::error::{Error, Result};
use crate::stencil::{compatible, random_segment, segments_valid, Segment, Stencil};

/// Resampling attempts before a variation step gives up.
pub const REPAIR_ATTEMPTS: usize = 20;

/// Closed axis-aligned rectangle in continuous grid space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Area {
    pub fn from_corners(a: (f64, f64), b: (f64, f64)) -> Self {
        Area {
            x0: a.0.min(b.0),
            y0: a.1.min(b.1),
            x1: a.0.max(b.0),
            y1: a.1.max(b.1),
        }
    }

    pub fn random<R: Rng + ?Sized>(max: f64, rng: &mut R) -> Self {
        let mut corner = || (rng.random::<f64>() * max, rng.random::<f64>() * max);
        let a = corner();
        let b = corner();
        Area::from_corners(a, b)
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        (self.x0..=self.x1).contains(&p.0) && (self.y0..=self.y1).contains(&p.1)
    }
}

fn dedup_push(list: &mut Vec<Segment>, seg: Segment) {
    if !list.contains(&seg) {
        list.push(seg);
    }
}

/// Swaps the segments whose midpoints fall in `area`. Returns `None` when no
/// segment moves, otherwise the children's genotypes (unchecked).
pub fn exchange_area(
    a: &[Segment],
    b: &[Segment],
    area: &Area,
) -> Option<(Vec<Segment>, Vec<Segment>)> {
    let inside = |s: &&Segment| area.contains(s.midpoint());
    let (a_in, a_out): (Vec<&Segment>, Vec<&Segment>) = a.iter().partition(inside);
    let (b_in, b_out): (Vec<&Segment>, Vec<&Segment>) = b.iter().partition(inside);
    if a_in.is_empty() && b_in.is_empty() {
        return None;
    }
    let mut child_a = Vec::with_capacity(a_out.len() + b_in.len());
    for s in a_out.into_iter().chain(b_in) {
        dedup_push(&mut child_a, *s);
    }
    let mut child_b = Vec::with_capacity(b_out.len() + a_in.len());
    for s in b_out.into_iter().chain(a_in) {
        dedup_push(&mut child_b, *s);
    }
    Some((child_a, child_b))
}

/// Area crossover against a fixed rectangle. Invalid children fall back to
/// copies of the parents.
pub fn area_crossover_with(a: &Stencil, b: &Stencil, area: &Area) -> (Stencil, Stencil) {
    try_area_crossover(a, b, area).unwrap_or_else(|| (a.clone(), b.clone()))
}

fn try_area_crossover(a: &Stencil, b: &Stencil, area: &Area) -> Option<(Stencil, Stencil)> {
    let (ca, cb) = exchange_area(&a.segments, &b.segments, area)?;
    let ok = |p: &Stencil, segs: &[Segment]| segments_valid(&p.grid, &p.bounds, segs);
    if ok(a, &ca) && ok(b, &cb) {
        Some((
            Stencil::from_valid(a.grid, a.bounds, ca),
            Stencil::from_valid(b.grid, b.bounds, cb),
        ))
    } else {
        None
    }
}

/// Exchanges the segments of two parents whose midpoints fall in a random
/// rectangle, resampling the rectangle when a child would be invalid.
pub fn area_crossover<R: Rng + ?Sized>(a: &Stencil, b: &Stencil, rng: &mut R) -> (Stencil, Stencil) {
    let max = a.grid.max_coord() as f64;
    for _ in 0..REPAIR_ATTEMPTS {
        let area = Area::random(max, rng);
        match exchange_area(&a.segments, &b.segments, &area) {
            // nothing inside: the children are the parents
            None => return (a.clone(), b.clone()),
            Some(_) => {
                if let Some(children) = try_area_crossover(a, b, &area) {
                    return children;
                }
            }
        }
    }
    (a.clone(), b.clone())
}

const DIRECTIONS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Moves one endpoint of `segments[index]` by one grid step. Returns whether
/// a valid move was found.
fn nudge_segment<R: Rng + ?Sized>(stencil: &mut Stencil, index: usize, rng: &mut R) -> bool {
    let grid = stencil.grid;
    let seg = stencil.segments[index];
    for _ in 0..REPAIR_ATTEMPTS {
        let move_start = rng.random_bool(0.5);
        let (px, py) = if move_start { seg.start() } else { seg.end() };
        let options: Vec<(i32, i32)> = DIRECTIONS
            .iter()
            .map(|(dx, dy)| (px + dx, py + dy))
            .filter(|&(x, y)| grid.contains(x, y))
            .collect();
        let (nx, ny) = options[rng.random_range(0..options.len())];
        let moved = if move_start {
            Segment::new(nx, ny, seg.x2, seg.y2)
        } else {
            Segment::new(seg.x1, seg.y1, nx, ny)
        };
        if moved.is_null() {
            continue;
        }
        let others: Vec<Segment> = stencil
            .segments
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != index)
            .map(|(_, s)| *s)
            .collect();
        if compatible(&others, &moved) {
            stencil.segments[index] = moved;
            return true;
        }
    }
    false
}

/// Applies deletion, modification and insertion, each with its own
/// (boosted) probability, in that order.
pub fn mutate<R: Rng + ?Sized>(
    stencil: &Stencil,
    config: &MutationConfig,
    boost: f64,
    rng: &mut R,
) -> Stencil {
    let rates = config.boosted(boost);
    let mut out = stencil.clone();
    let mut changed = false;

    if rng.random_bool(rates.p_delete) && out.len() > out.bounds.min {
        let i = rng.random_range(0..out.len());
        out.segments.remove(i);
        changed = true;
    }

    if rng.random_bool(rates.p_modify) && !out.is_empty() {
        let mut picked: Vec<usize> = (0..out.len())
            .filter(|_| rng.random_bool(rates.per_segment_rate))
            .collect();
        if picked.is_empty() {
            picked.push(rng.random_range(0..out.len()));
        }
        for i in picked {
            changed |= nudge_segment(&mut out, i, rng);
        }
    }

    if rng.random_bool(rates.p_insert) && out.len() < out.bounds.max {
        for _ in 0..REPAIR_ATTEMPTS {
            let seg = random_segment(&out.grid, rng);
            if compatible(&out.segments, &seg) {
                out.segments.push(seg);
                changed = true;
                break;
            }
        }
    }

    if changed {
        out.clear_evaluation();
    }
    debug_assert!(crate::stencil::is_valid(&out));
    out
}

/// Jaccard similarity of two genotypes as segment sets.
pub fn jaccard(a: &[u64], b: &[u64]) -> f64 {
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        1.0
    } else {
        common as f64 / union as f64
    }
}

/// Mean Jaccard similarity over all unordered pairs of the population.
pub fn population_similarity(population: &[Stencil]) -> Result<f64> {
    if population.len() < 2 {
        return Err(Error::InvalidConfig(
            "population similarity needs at least two individuals".into(),
        ));
    }
    let keys: Vec<Vec<u64>> = population.iter().map(Stencil::segment_keys).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            total += jaccard(&keys[i], &keys[j]);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{is_valid, random_stencil, Bounds, GridSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn stencil(bounds: (usize, usize), segs: &[(i32, i32, i32, i32)]) -> Stencil {
        Stencil::new(
            GridSpec::default(),
            Bounds::new(bounds.0, bounds.1).unwrap(),
            segs.iter().map(|&(a, b, c, d)| Segment::new(a, b, c, d)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn full_area_swaps_genotypes() {
        let a = stencil((1, 40), &[(0, 0, 9, 0), (1, 1, 1, 8)]);
        let b = stencil((1, 40), &[(2, 2, 7, 7), (0, 9, 9, 9), (5, 0, 5, 4)]);
        let whole = Area { x0: 0.0, y0: 0.0, x1: 9.0, y1: 9.0 };
        let (ca, cb) = area_crossover_with(&a, &b, &whole);
        assert_eq!(ca.segments, b.segments);
        assert_eq!(cb.segments, a.segments);
    }

    #[test]
    fn empty_area_returns_parents() {
        let a = stencil((1, 40), &[(0, 0, 9, 0)]);
        let b = stencil((1, 40), &[(0, 9, 9, 9)]);
        let nowhere = Area { x0: 3.2, y0: 3.2, x1: 3.3, y1: 3.3 };
        let (ca, cb) = area_crossover_with(&a, &b, &nowhere);
        assert_eq!((ca, cb), (a, b));
    }

    #[test]
    fn one_segment_moves_across() {
        let a = stencil((1, 40), &[(1, 1, 3, 3), (0, 8, 9, 8)]);
        let b = stencil((1, 40), &[(6, 0, 9, 0), (7, 5, 9, 9)]);
        let area = Area { x0: 1.0, y0: 1.0, x1: 3.0, y1: 3.0 };
        assert_eq!(a.segments[0].midpoint(), (2.0, 2.0));
        let (ca, cb) = area_crossover_with(&a, &b, &area);
        assert_eq!(ca.segments, vec![Segment::new(0, 8, 9, 8)]);
        assert_eq!(cb.len(), 3);
        assert!(cb.segments.contains(&Segment::new(1, 1, 3, 3)));
    }

    #[test]
    fn crossover_falls_back_when_bounds_break() {
        let a = stencil((2, 2), &[(1, 1, 3, 3), (0, 8, 9, 8)]);
        let b = stencil((2, 2), &[(6, 0, 9, 0), (7, 5, 9, 9)]);
        let area = Area { x0: 1.0, y0: 1.0, x1: 3.0, y1: 3.0 };
        let (ca, cb) = area_crossover_with(&a, &b, &area);
        assert_eq!((ca, cb), (a, b));
    }

    #[test]
    fn crossover_conserves_segments_without_repair() {
        let grid = GridSpec::default();
        let bounds = Bounds::new(1, 80).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..500 {
            let a = random_stencil(grid, Bounds::new(5, 20).unwrap(), &mut rng).unwrap();
            let b = random_stencil(grid, Bounds::new(5, 20).unwrap(), &mut rng).unwrap();
            let a = Stencil { bounds, ..a };
            let b = Stencil { bounds, ..b };
            let area = Area::random(9.0, &mut rng);
            let Some((ca, cb)) = exchange_area(&a.segments, &b.segments, &area) else {
                continue;
            };
            let dups = ca.len() + cb.len() != a.len() + b.len();
            if dups || !segments_valid(&grid, &bounds, &ca) || !segments_valid(&grid, &bounds, &cb) {
                continue;
            }
            let mut parents: Vec<Segment> = a.segments.iter().chain(&b.segments).copied().collect();
            let mut children: Vec<Segment> = ca.iter().chain(&cb).copied().collect();
            parents.sort();
            children.sort();
            assert_eq!(parents, children);
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn zero_probabilities_leave_input_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_stencil(GridSpec::default(), Bounds::default(), &mut rng).unwrap();
        let out = mutate(&s, &MutationConfig::none(), 3.0, &mut rng);
        assert_eq!(out, s);
    }

    #[test]
    fn deletion_respects_minimum() {
        let s = stencil((2, 40), &[(0, 0, 9, 0), (0, 9, 9, 9)]);
        let cfg = MutationConfig { p_delete: 1.0, ..MutationConfig::none() };
        let out = mutate(&s, &cfg, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out, s);
        let s3 = stencil((2, 40), &[(0, 0, 9, 0), (0, 9, 9, 9), (4, 0, 4, 9)]);
        let out = mutate(&s3, &cfg, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn modification_moves_one_endpoint_by_one_step() {
        let cfg = MutationConfig { p_modify: 1.0, ..MutationConfig::none() };
        for seed in 0..50 {
            let s = stencil((1, 1), &[(2, 3, 6, 7)]);
            let out = mutate(&s, &cfg, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
            let before = [s.segments[0].start(), s.segments[0].end()];
            let after = [out.segments[0].start(), out.segments[0].end()];
            let kept = before.iter().filter(|p| after.contains(p)).count();
            assert_eq!(kept, 1, "seed {seed}: {before:?} -> {after:?}");
            let old = before.iter().find(|p| !after.contains(p)).unwrap();
            let new = after.iter().find(|p| !before.contains(p)).unwrap();
            let cheb = (old.0 - new.0).abs().max((old.1 - new.1).abs());
            assert_eq!(cheb, 1);
        }
    }

    #[test]
    fn corner_endpoint_moves_stay_in_grid() {
        let cfg = MutationConfig { p_modify: 1.0, ..MutationConfig::none() };
        for seed in 0..100 {
            let s = stencil((1, 1), &[(0, 0, 9, 9)]);
            let out = mutate(&s, &cfg, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
            assert!(is_valid(&out));
        }
    }

    #[test]
    fn insertion_respects_maximum() {
        let cfg = MutationConfig { p_insert: 1.0, ..MutationConfig::none() };
        let full = stencil((1, 2), &[(0, 0, 9, 0), (0, 9, 9, 9)]);
        assert_eq!(mutate(&full, &cfg, 1.0, &mut ChaCha8Rng::seed_from_u64(0)), full);
        let one = stencil((1, 2), &[(0, 0, 9, 0)]);
        assert_eq!(mutate(&one, &cfg, 1.0, &mut ChaCha8Rng::seed_from_u64(0)).len(), 2);
    }

    #[test]
    fn boost_scales_procedure_frequency() {
        let cfg = MutationConfig { p_insert: 0.1, ..MutationConfig::none() };
        let s = stencil((1, 40), &[(0, 0, 9, 0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 4000;
        let count = |boost: f64, rng: &mut ChaCha8Rng| {
            (0..trials).filter(|_| mutate(&s, &cfg, boost, rng).len() == 2).count() as f64 / trials as f64
        };
        let plain = count(1.0, &mut rng);
        let boosted = count(3.0, &mut rng);
        assert!((plain - 0.1).abs() < 0.03, "{plain}");
        assert!((boosted - 0.3).abs() < 0.04, "{boosted}");
    }

    #[test]
    fn similarity_examples() {
        let a = stencil((1, 40), &[(0, 0, 9, 0), (0, 9, 9, 9)]);
        assert_eq!(population_similarity(&[a.clone(), a.clone(), a.clone()]).unwrap(), 1.0);
        let b = stencil((1, 40), &[(1, 1, 8, 1)]);
        let c = stencil((1, 40), &[(2, 2, 2, 8)]);
        assert_eq!(population_similarity(&[a.clone(), b, c]).unwrap(), 0.0);
        assert!(population_similarity(&[a]).is_err());

        // 5 shared of a union of 10
        let shared: Vec<(i32, i32, i32, i32)> = (0..5).map(|i| (0, i, 9, i)).collect();
        let mut xs = shared.clone();
        xs.extend((5..8).map(|i| (0, i, 9, i)));
        let mut ys = shared;
        ys.extend((0..2).map(|i| (i, 0, i, 9)));
        let x = stencil((1, 40), &xs);
        let y = stencil((1, 40), &ys);
        assert_eq!(population_similarity(&[x, y]).unwrap(), 0.5);
    }

    #[test]
    fn mutation_keeps_unchanged_evaluation() {
        let mut s = stencil((1, 40), &[(0, 0, 9, 0)]);
        s.fitness = Some(0.5);
        s.solutions = BTreeMap::new();
        let out = mutate(&s, &MutationConfig::none(), 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.fitness, Some(0.5));
    }
}
