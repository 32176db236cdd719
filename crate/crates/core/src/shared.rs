//! How many stencil elements each pair of glyphs has in common.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stencil::Stencil;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedElementMatrix {
    pub characters: Vec<char>,
    /// `counts[i][j]` = segments active in both best masks.
    pub counts: Vec<Vec<usize>>,
}

impl SharedElementMatrix {
    pub fn get(&self, a: char, b: char) -> Option<usize> {
        let i = self.characters.iter().position(|&c| c == a)?;
        let j = self.characters.iter().position(|&c| c == b)?;
        Some(self.counts[i][j])
    }

    /// Header row and column of characters, integer cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("char");
        for c in &self.characters {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (c, row) in self.characters.iter().zip(&self.counts) {
            out.push(*c);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Shared-element counts between the best masks of `characters`.
pub fn shared_elements_for(stencil: &Stencil, characters: &[char]) -> Result<SharedElementMatrix> {
    let masks = characters
        .iter()
        .map(|&c| stencil.solution(c).map(|s| &s.best_mask))
        .collect::<Result<Vec<_>>>()?;
    let counts = masks
        .iter()
        .map(|a| masks.iter().map(|b| a.intersection_count(b)).collect())
        .collect();
    Ok(SharedElementMatrix {
        characters: characters.to_vec(),
        counts,
    })
}

/// Shared-element counts over every solved character, in character order.
pub fn shared_elements(stencil: &Stencil) -> Result<SharedElementMatrix> {
    let chars: Vec<char> = stencil.solutions.keys().copied().collect();
    shared_elements_for(stencil, &chars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stencil::{Bounds, GlyphMask, GlyphSolution, GridSpec, Segment};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn stencil_with_masks(n: usize, masks: &[(char, GlyphMask)]) -> Stencil {
        let segments = (0..n as i32).map(|i| Segment::new(0, i, 9, i)).collect();
        let mut solutions = BTreeMap::new();
        for (c, m) in masks {
            solutions.insert(
                *c,
                GlyphSolution {
                    character: *c,
                    best_mask: m.clone(),
                    best_score: 0.5,
                    alternatives: vec![(m.clone(), 0.5)],
                },
            );
        }
        Stencil {
            grid: GridSpec::default(),
            bounds: Bounds { min: 1, max: 40 },
            segments,
            solutions,
            fitness: None,
        }
    }

    #[test]
    fn identical_and_disjoint_masks() {
        let o = GlyphMask::from_indices(10, 0..10).unwrap();
        let s = stencil_with_masks(10, &[('O', o.clone()), ('Q', o)]);
        let m = shared_elements(&s).unwrap();
        assert_eq!(m.get('O', 'Q'), Some(10));
        let s = stencil_with_masks(
            6,
            &[
                ('A', GlyphMask::from_indices(6, [0, 1, 2]).unwrap()),
                ('B', GlyphMask::from_indices(6, [3, 4]).unwrap()),
            ],
        );
        let m = shared_elements(&s).unwrap();
        assert_eq!(m.get('A', 'B'), Some(0));
        assert_eq!(m.get('A', 'A'), Some(3));
        assert_eq!(m.to_csv(), "char,A,B\nA,3,0\nB,0,2\n");
    }

    #[test]
    fn random_masks_match_bitwise_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let raw: Vec<(char, u64)> = ('A'..='Z').map(|c| (c, rng.random::<u64>() & ((1 << n) - 1))).collect();
        let masks: Vec<(char, GlyphMask)> = raw
            .iter()
            .map(|&(c, bits)| (c, GlyphMask::from_indices(n, (0..n).filter(|i| bits >> i & 1 == 1)).unwrap()))
            .collect();
        let m = shared_elements(&stencil_with_masks(n, &masks)).unwrap();
        for (i, &(_, a)) in raw.iter().enumerate() {
            for (j, &(_, b)) in raw.iter().enumerate() {
                assert_eq!(m.counts[i][j], (a & b).count_ones() as usize);
            }
        }
        for i in 0..26 {
            for j in 0..26 {
                assert_eq!(m.counts[i][j], m.counts[j][i]);
            }
        }
    }

    #[test]
    fn missing_solution_is_an_error() {
        let s = stencil_with_masks(3, &[]);
        assert!(shared_elements_for(&s, &['A']).is_err());
    }
}
