//! Greedy forward selection of the mask that best draws one target glyph.
//!
//! The search starts from the empty mask. Each step scores every mask that
//! activates exactly one more segment, accepts the best one if it strictly
//! improves on the current score (ties go to the lowest segment index), and
//! stops otherwise.
//!
//! Scores are computed incrementally: a binary canvas differs from white only
//! where ink is, so the fixed-point error sum of a mask is the all-white sum
//! plus a per-pixel correction over its inked pixels. Because the sum is an
//! exact integer it matches [`crate::raster::rmse`] on the materialized render.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{quantized_sq_error, score_from_sum, segment_pixels, Canvas, RenderSettings};
use crate::stencil::{GlyphMask, GlyphSolution, Stencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Alternatives kept per character, best mask included.
    pub top_k: usize,
}

impl SearchConfig {
    pub fn new(top_k: usize) -> Result<Self> {
        if top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be at least 1".into()));
        }
        Ok(SearchConfig { top_k })
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { top_k: 5 }
    }
}

/// Error table of one target canvas.
#[derive(Debug, Clone)]
pub struct TargetCosts {
    /// Fixed-point error of the all-white canvas.
    white_sum: u128,
    /// Change in error when a pixel flips from white to ink.
    ink_delta: Vec<i64>,
}

impl TargetCosts {
    pub fn new(target: &Canvas) -> Self {
        let mut white_sum = 0u128;
        let ink_delta = target
            .pixels()
            .iter()
            .map(|&t| {
                let white = quantized_sq_error(1.0, t);
                let ink = quantized_sq_error(0.0, t);
                white_sum += white as u128;
                ink as i64 - white as i64
            })
            .collect();
        TargetCosts {
            white_sum,
            ink_delta,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.ink_delta.len()
    }
}

/// Pixel footprint of every segment of one stencil.
#[derive(Debug, Clone)]
pub struct StencilInk {
    pixels: Vec<Vec<u32>>,
    pixel_count: usize,
}

impl StencilInk {
    pub fn new(stencil: &Stencil, settings: &RenderSettings) -> Self {
        StencilInk {
            pixels: stencil
                .segments
                .iter()
                .map(|s| segment_pixels(s, &stencil.grid, settings))
                .collect(),
            pixel_count: settings.canvas_size * settings.canvas_size,
        }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Bounded list of the best distinct masks, in descending score. Equal scores
/// keep evaluation order.
struct TopK {
    k: usize,
    entries: Vec<(GlyphMask, f64)>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            entries: Vec::with_capacity(k + 1),
        }
    }

    fn offer(&mut self, score: f64, mask: impl FnOnce() -> GlyphMask) {
        if self.entries.len() == self.k {
            match self.entries.last() {
                Some((_, worst)) if score > *worst => {}
                _ => return,
            }
        }
        let at = self.entries.partition_point(|(_, s)| *s >= score);
        self.entries.insert(at, (mask(), score));
        self.entries.truncate(self.k);
    }
}

/// Runs the greedy search for one precomputed target.
pub fn hillclimb_precomputed(
    ink: &StencilInk,
    costs: &TargetCosts,
    character: char,
    config: &SearchConfig,
) -> GlyphSolution {
    debug_assert_eq!(ink.pixel_count, costs.pixel_count());
    let n = ink.len();
    let pixels = costs.pixel_count();
    let mut inked = vec![0u64; pixels.div_ceil(64)];
    let mut current = GlyphMask::empty(n);
    let mut current_sum = costs.white_sum as i128;
    let mut current_score = score_from_sum(costs.white_sum, pixels);
    let mut top = TopK::new(config.top_k);
    top.offer(current_score, || current.clone());

    loop {
        let mut best: Option<(usize, f64, i128)> = None;
        for (i, footprint) in ink.pixels.iter().enumerate() {
            if current.is_active(i) {
                continue;
            }
            let delta: i128 = footprint
                .iter()
                .filter(|&&p| inked[p as usize / 64] >> (p % 64) & 1 == 0)
                .map(|&p| costs.ink_delta[p as usize] as i128)
                .sum();
            let sum = current_sum + delta;
            let score = score_from_sum(sum as u128, pixels);
            top.offer(score, || current.with(i));
            if best.is_none_or(|(_, s, _)| score > s) {
                best = Some((i, score, sum));
            }
        }
        match best {
            Some((i, score, sum)) if score > current_score => {
                current.activate(i);
                for &p in &ink.pixels[i] {
                    inked[p as usize / 64] |= 1 << (p % 64);
                }
                current_sum = sum;
                current_score = score;
            }
            _ => break,
        }
    }

    GlyphSolution {
        character,
        best_mask: current,
        best_score: current_score,
        alternatives: top.entries,
    }
}

/// Greedy mask search for `character` against `target`.
pub fn hillclimb_mask(
    stencil: &Stencil,
    character: char,
    target: &Canvas,
    settings: &RenderSettings,
    config: &SearchConfig,
) -> Result<GlyphSolution> {
    if target.size() != settings.canvas_size {
        return Err(Error::SizeMismatch {
            left: target.size(),
            right: settings.canvas_size,
        });
    }
    let ink = StencilInk::new(stencil, settings);
    let costs = TargetCosts::new(target);
    Ok(hillclimb_precomputed(&ink, &costs, character, config))
}
