//! Grids, segments, stencils and masks.
//!
//! A stencil is a variable-length list of line segments whose endpoints sit on
//! the points of a square grid. Each character is drawn by activating a subset
//! of the segments, described by a [`GlyphMask`].

use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rejections allowed before [`random_stencil`] gives up.
pub const DEFAULT_ATTEMPT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Grid points per axis. Coordinates range over `0..density`.
    pub density: u32,
}

impl GridSpec {
    pub fn new(density: u32) -> Result<Self> {
        if density < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid density must be at least 2, got {density}"
            )));
        }
        Ok(Self { density })
    }

    #[inline]
    pub fn contains(&self, x: i32, y: i32) -> bool {
        let max = self.density as i32;
        (0..max).contains(&x) && (0..max).contains(&y)
    }

    pub fn max_coord(&self) -> i32 {
        self.density as i32 - 1
    }

    /// Number of distinct non-degenerate segments on this grid.
    pub fn segment_universe(&self) -> u64 {
        let points = (self.density as u64).pow(2);
        points * (points - 1) / 2
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { density: 10 }
    }
}

/// Inclusive segment-count range of a stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct Bounds {
    pub min: usize,
    pub max: usize,
}

impl Bounds {
    pub fn new(min: usize, max: usize) -> Result<Self> {
        if min == 0 || min > max {
            return Err(Error::InvalidConfig(format!(
                "segment bounds must satisfy 1 <= min <= max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn contains(&self, n: usize) -> bool {
        (self.min..=self.max).contains(&n)
    }

    /// Checks that the grid offers at least `min` distinct segments.
    pub fn check_feasible(&self, grid: &GridSpec) -> Result<()> {
        if (self.min as u64) > grid.segment_universe() {
            return Err(Error::Infeasible(format!(
                "a {0}x{0} grid has only {1} distinct segments but min_segments is {2}",
                grid.density,
                grid.segment_universe(),
                self.min
            )));
        }
        Ok(())
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self { min: 10, max: 40 }
    }
}

/// One stencil element. Endpoints are kept in canonical order:
/// `(x1, y1) <= (x2, y2)` lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Segment {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
}

impl Segment {
    /// Builds a canonically oriented segment.
    pub fn new(x1: i32, y1: i32, x2: i32, y2: i32) -> Self {
        Segment { x1, y1, x2, y2 }.canonical()
    }

    pub fn canonical(self) -> Self {
        if (self.x1, self.y1) <= (self.x2, self.y2) {
            self
        } else {
            Segment {
                x1: self.x2,
                y1: self.y2,
                x2: self.x1,
                y2: self.y1,
            }
        }
    }

    pub fn is_canonical(&self) -> bool {
        (self.x1, self.y1) <= (self.x2, self.y2)
    }

    pub fn start(&self) -> (i32, i32) {
        (self.x1, self.y1)
    }

    pub fn end(&self) -> (i32, i32) {
        (self.x2, self.y2)
    }

    pub fn is_null(&self) -> bool {
        self.start() == self.end()
    }

    pub fn in_grid(&self, grid: &GridSpec) -> bool {
        grid.contains(self.x1, self.y1) && grid.contains(self.x2, self.y2)
    }

    pub fn midpoint(&self) -> (f64, f64) {
        segment_midpoint(self)
    }

    pub fn length(&self) -> f64 {
        let dx = (self.x2 - self.x1) as f64;
        let dy = (self.y2 - self.y1) as f64;
        dx.hypot(dy)
    }

    /// Whether `p` lies on this segment's closed axis (exact integer test).
    pub fn touches_point(&self, p: (i32, i32)) -> bool {
        let dx = (self.x2 - self.x1) as i64;
        let dy = (self.y2 - self.y1) as i64;
        let px = (p.0 - self.x1) as i64;
        let py = (p.1 - self.y1) as i64;
        if dx * py - dy * px != 0 {
            return false;
        }
        let (lo_x, hi_x) = (self.x1.min(self.x2), self.x1.max(self.x2));
        let (lo_y, hi_y) = (self.y1.min(self.y2), self.y1.max(self.y2));
        (lo_x..=hi_x).contains(&p.0) && (lo_y..=hi_y).contains(&p.1)
    }

    /// Whether `other` lies entirely on this segment. Distinct segments only.
    pub fn contains(&self, other: &Segment) -> bool {
        self != other && self.touches_point(other.start()) && self.touches_point(other.end())
    }

    /// Stable integer key, used for set comparisons between genotypes.
    pub fn key(&self) -> u64 {
        let c = |v: i32| (v as u16) as u64;
        (c(self.x1) << 48) | (c(self.y1) << 32) | (c(self.x2) << 16) | c(self.y2)
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})-({},{})", self.x1, self.y1, self.x2, self.y2)
    }
}

/// Exact midpoint of a segment in grid space.
pub fn segment_midpoint(seg: &Segment) -> (f64, f64) {
    (
        (seg.x1 + seg.x2) as f64 / 2.0,
        (seg.y1 + seg.y2) as f64 / 2.0,
    )
}

/// Bit vector over a stencil's segments; bit `i` activates segment `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlyphMask(FixedBitSet);

impl GlyphMask {
    pub fn empty(len: usize) -> Self {
        GlyphMask(FixedBitSet::with_capacity(len))
    }

    pub fn full(len: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(len);
        bits.insert_range(..);
        GlyphMask(bits)
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = Self::empty(len);
        for index in indices {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
            mask.0.insert(index);
        }
        Ok(mask)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.0.contains(index)
    }

    pub fn activate(&mut self, index: usize) {
        self.0.insert(index);
    }

    pub fn with(&self, index: usize) -> Self {
        let mut next = self.clone();
        next.activate(index);
        next
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn intersection_count(&self, other: &GlyphMask) -> usize {
        self.0.intersection_count(&other.0)
    }

    /// `'0'`/`'1'` characters indexed in genotype order.
    pub fn to_bitstring(&self) -> String {
        (0..self.len())
            .map(|i| if self.is_active(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        let mut mask = Self::empty(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => mask.activate(i),
                '0' => {}
                _ => return None,
            }
        }
        Some(mask)
    }
}

impl fmt::Display for GlyphMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Best mask found for one character plus the runner-up configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSolution {
    pub character: char,
    pub best_mask: GlyphMask,
    pub best_score: f64,
    /// Descending by score, masks pairwise distinct. The best mask is first.
    pub alternatives: Vec<(GlyphMask, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub grid: GridSpec,
    pub bounds: Bounds,
    pub segments: Vec<Segment>,
    pub solutions: BTreeMap<char, GlyphSolution>,
    pub fitness: Option<f64>,
}

impl Stencil {
    /// Builds a stencil, canonicalizing segments and rejecting invalid genotypes.
    pub fn new(grid: GridSpec, bounds: Bounds, segments: Vec<Segment>) -> Result<Self> {
        let segments: Vec<Segment> = segments.into_iter().map(Segment::canonical).collect();
        if let Some(reason) = violation(&grid, &bounds, &segments) {
            return Err(Error::InvalidConfig(format!("invalid stencil: {reason}")));
        }
        Ok(Self::from_valid(grid, bounds, segments))
    }

    pub(crate) fn from_valid(grid: GridSpec, bounds: Bounds, segments: Vec<Segment>) -> Self {
        debug_assert!(segments_valid(&grid, &bounds, &segments));
        Stencil {
            grid,
            bounds,
            segments,
            solutions: BTreeMap::new(),
            fitness: None,
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn solution(&self, character: char) -> Result<&GlyphSolution> {
        self.solutions
            .get(&character)
            .ok_or(Error::MissingSolution(character))
    }

    /// Drops cached solutions and fitness; used whenever the genotype changes.
    pub fn clear_evaluation(&mut self) {
        self.solutions.clear();
        self.fitness = None;
    }

    /// Sorted segment keys; equal for genotypes that are equal as sets.
    pub fn segment_keys(&self) -> Vec<u64> {
        let mut keys: Vec<u64> = self.segments.iter().map(Segment::key).collect();
        keys.sort_unstable();
        keys
    }
}

/// Full validity predicate: distinct, in-grid, within bounds, non-null, and no
/// segment containing another.
pub fn is_valid(stencil: &Stencil) -> bool {
    segments_valid(&stencil.grid, &stencil.bounds, &stencil.segments)
}

pub fn segments_valid(grid: &GridSpec, bounds: &Bounds, segments: &[Segment]) -> bool {
    violation(grid, bounds, segments).is_none()
}

fn violation(grid: &GridSpec, bounds: &Bounds, segments: &[Segment]) -> Option<String> {
    if !bounds.contains(segments.len()) {
        return Some(format!(
            "{} segments outside [{}, {}]",
            segments.len(),
            bounds.min,
            bounds.max
        ));
    }
    for (i, seg) in segments.iter().enumerate() {
        if !seg.is_canonical() {
            return Some(format!("segment {seg} is not canonically oriented"));
        }
        if !seg.in_grid(grid) {
            return Some(format!("segment {seg} leaves the grid"));
        }
        if seg.is_null() {
            return Some(format!("segment {seg} has null length"));
        }
        if let Some(other) = segments[..i].iter().find(|o| *o == seg) {
            return Some(format!("segment {other} is duplicated"));
        }
    }
    for a in segments {
        for b in segments {
            if a.contains(b) {
                return Some(format!("segment {a} contains {b}"));
            }
        }
    }
    None
}

/// Whether `candidate` may join `segments` without breaking distinctness or
/// containment. Grid and null-length checks are the caller's.
pub(crate) fn compatible(segments: &[Segment], candidate: &Segment) -> bool {
    segments
        .iter()
        .all(|s| s != candidate && !s.contains(candidate) && !candidate.contains(s))
}

/// Uniformly random non-null canonical segment on `grid`.
pub fn random_segment<R: Rng + ?Sized>(grid: &GridSpec, rng: &mut R) -> Segment {
    let d = grid.density as i32;
    loop {
        let seg = Segment::new(
            rng.random_range(0..d),
            rng.random_range(0..d),
            rng.random_range(0..d),
            rng.random_range(0..d),
        );
        if !seg.is_null() {
            return seg;
        }
    }
}

/// Random valid stencil with a segment count uniform in `bounds`.
pub fn random_stencil<R: Rng + ?Sized>(
    grid: GridSpec,
    bounds: Bounds,
    rng: &mut R,
) -> Result<Stencil> {
    random_stencil_with_budget(grid, bounds, DEFAULT_ATTEMPT_BUDGET, rng)
}

pub fn random_stencil_with_budget<R: Rng + ?Sized>(
    grid: GridSpec,
    bounds: Bounds,
    budget: usize,
    rng: &mut R,
) -> Result<Stencil> {
    bounds.check_feasible(&grid)?;
    let target = rng.random_range(bounds.min..=bounds.max);
    let mut segments = Vec::with_capacity(target);
    let mut rejections = 0;
    while segments.len() < target {
        let candidate = random_segment(&grid, rng);
        if compatible(&segments, &candidate) {
            segments.push(candidate);
        } else {
            rejections += 1;
            if rejections > budget {
                return Err(Error::Infeasible(format!(
                    "could not place {target} compatible segments on a {0}x{0} grid \
                     within {budget} rejections",
                    grid.density
                )));
            }
        }
    }
    Ok(Stencil::from_valid(grid, bounds, segments))
}
