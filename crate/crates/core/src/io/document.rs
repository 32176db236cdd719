//! The `.stencil` document: a versioned JSON file holding one evaluated
//! stencil together with the settings needed to redraw it.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fitness::FitnessVariant;
use crate::raster::RenderSettings;
use crate::stencil::{Bounds, GlyphMask, GlyphSolution, GridSpec, Segment, Stencil};

pub const FORMAT_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = "stencil";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeRecord {
    /// One `'0'`/`'1'` per segment, in genotype order.
    pub mask: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub best_mask: String,
    pub best_score: f64,
    pub alternatives: Vec<AlternativeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub variant: FitnessVariant,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub generation: usize,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilDocument {
    pub format_version: u32,
    pub grid_density: u32,
    pub bounds: Bounds,
    pub render: RenderSettings,
    pub segments: Vec<Segment>,
    pub solutions: BTreeMap<char, SolutionRecord>,
    pub fitness: Option<FitnessRecord>,
    pub provenance: Option<Provenance>,
    /// Fields this version does not know, kept verbatim.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl StencilDocument {
    pub fn from_stencil(
        stencil: &Stencil,
        render: RenderSettings,
        variant: Option<FitnessVariant>,
        provenance: Option<Provenance>,
    ) -> Self {
        let solutions = stencil
            .solutions
            .iter()
            .map(|(&c, s)| {
                let record = SolutionRecord {
                    best_mask: s.best_mask.to_bitstring(),
                    best_score: s.best_score,
                    alternatives: s
                        .alternatives
                        .iter()
                        .map(|(m, score)| AlternativeRecord {
                            mask: m.to_bitstring(),
                            score: *score,
                        })
                        .collect(),
                };
                (c, record)
            })
            .collect();
        let fitness = match (variant, stencil.fitness) {
            (Some(variant), Some(value)) => Some(FitnessRecord { variant, value }),
            _ => None,
        };
        StencilDocument {
            format_version: FORMAT_VERSION,
            grid_density: stencil.grid.density,
            bounds: stencil.bounds,
            render,
            segments: stencil.segments.clone(),
            solutions,
            fitness,
            provenance,
            extra: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            density: self.grid_density,
        }
    }

    /// Rebuilds the stencil, checking validity and mask lengths.
    pub fn to_stencil(&self) -> Result<Stencil> {
        let mut stencil = Stencil::new(GridSpec::new(self.grid_density)?, self.bounds, self.segments.clone())?;
        let n = stencil.len();
        let parse = |bits: &str| -> Result<GlyphMask> {
            let mask = GlyphMask::from_bitstring(bits)
                .ok_or_else(|| Error::InvalidConfig(format!("mask {bits:?} is not a bitstring")))?;
            if mask.len() != n {
                return Err(Error::MaskLength {
                    mask: mask.len(),
                    segments: n,
                });
            }
            Ok(mask)
        };
        for (&c, record) in &self.solutions {
            let alternatives = record
                .alternatives
                .iter()
                .map(|a| Ok((parse(&a.mask)?, a.score)))
                .collect::<Result<Vec<_>>>()?;
            stencil.solutions.insert(
                c,
                GlyphSolution {
                    character: c,
                    best_mask: parse(&record.best_mask)?,
                    best_score: record.best_score,
                    alternatives,
                },
            );
        }
        stencil.fitness = self.fitness.map(|f| f.value);
        Ok(stencil)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StencilDocument =
            serde_json::from_str(text).map_err(|e| Error::Document {
                offset: byte_offset(text, e.line(), e.column()),
                message: e.to_string(),
            })?;
        if doc.format_version == 0 || doc.format_version > FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(doc.format_version));
        }
        Ok(doc)
    }
}

/// Converts a 1-based line and column into a byte offset, clamped to the input.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

pub fn save_stencil(doc: &StencilDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, doc.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_stencil(path: impl AsRef<Path>) -> Result<StencilDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    StencilDocument::from_json(&text)
}
