//! Slow, obviously-correct references used by the acceptance run.

use stencilforge::raster::{render, rmse, Canvas};
use stencilforge::{GlyphMask, RenderSettings, Stencil};

/// Steepest-ascent mask search scoring every candidate by a full render.
/// Returns (best mask, best score, top-k distinct masks seen, best first).
pub fn reference_hillclimb(
    stencil: &Stencil,
    target: &Canvas,
    settings: &RenderSettings,
    top_k: usize,
) -> (GlyphMask, f64, Vec<(GlyphMask, f64)>) {
    let n = stencil.len();
    let score = |mask: &GlyphMask| 1.0 - rmse(&render(stencil, mask, settings).unwrap(), target).unwrap();

    let mut seen: Vec<(GlyphMask, f64)> = Vec::new();
    let mut current = GlyphMask::empty(n);
    let mut current_score = score(&current);
    seen.push((current.clone(), current_score));
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !current.is_active(i)) {
            let candidate = current.with(i);
            let s = score(&candidate);
            seen.push((candidate, s));
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        match best {
            Some((i, s)) if s > current_score => {
                current.activate(i);
                current_score = s;
            }
            _ => break,
        }
    }

    let mut distinct: Vec<(GlyphMask, f64)> = Vec::new();
    for (m, s) in seen {
        if !distinct.iter().any(|(d, _)| *d == m) {
            distinct.push((m, s));
        }
    }
    // Stable: equal scores stay in evaluation order.
    distinct.sort_by(|a, b| b.1.total_cmp(&a.1));
    distinct.truncate(top_k);
    (current, current_score, distinct)
}

/// Shared-element CSV recomputed from plain integer bitsets.
pub fn shared_csv_oracle(stencil: &Stencil, chars: &[char]) -> String {
    let words = stencil.len().div_ceil(64).max(1);
    let sets: Vec<Vec<u64>> = chars
        .iter()
        .map(|c| {
            let mut bits = vec![0u64; words];
            let mask = &stencil.solutions[c].best_mask;
            for i in 0..stencil.len() {
                if mask.is_active(i) {
                    bits[i / 64] |= 1 << (i % 64);
                }
            }
            bits
        })
        .collect();
    let mut out = String::from("char");
    for c in chars {
        out.push(',');
        out.push(*c);
    }
    out.push('\n');
    for (c, a) in chars.iter().zip(&sets) {
        out.push(*c);
        for b in &sets {
            let n: u32 = a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum();
            out.push_str(&format!(",{n}"));
        }
        out.push('\n');
    }
    out
}
