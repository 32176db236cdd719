//! Shape replacement: every active segment of a glyph is drawn with a
//! decorative asset instead of a plain stroke.
//!
//! Assets live in a unit frame where the segment runs from `(0,0)` to `(1,0)`
//! and `y` spans the stroke height over `[-0.5, 0.5]`. An asset is stretched
//! along the segment by its length and across it by the stroke weight.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::document::StencilDocument;
use super::svg::{best_mask, close_svg, escape, grid_stroke, grid_transform, open_svg};
use crate::error::{Error, Result};
use crate::stencil::{GlyphMask, Segment};

/// Library shipped with the crate.
pub const BUILTIN_SHAPES: &str = include_str!("../../assets/shapes.lib");

/// Horizontal gap added to the canvas width between specimen glyphs.
pub const DEFAULT_TRACKING: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "paint", rename_all = "lowercase")]
pub enum ShapePaint {
    /// Even-odd fill.
    Fill,
    /// Stroke of the given width in unit-frame coordinates, butt caps.
    Stroke { width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeAsset {
    pub id: String,
    #[serde(flatten)]
    pub paint: ShapePaint,
    /// SVG path data using absolute commands only.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeLibrary {
    pub assets: Vec<ShapeAsset>,
}

fn arity(command: &str) -> Option<usize> {
    Some(match command {
        "M" | "L" => 2,
        "H" | "V" => 1,
        "C" => 6,
        "Q" => 4,
        "A" => 7,
        "Z" => 0,
        _ => return None,
    })
}

/// Checks path syntax and returns it with normalized spacing.
fn normalize_path(body: &str) -> std::result::Result<String, String> {
    let tokens: Vec<&str> = body
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect();
    if tokens.is_empty() {
        return Err("empty path".into());
    }
    if tokens[0] != "M" {
        return Err("path must start with M".into());
    }
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let command = tokens[i];
        let n = arity(command).ok_or_else(|| format!("unsupported command {command:?}"))?;
        out.push(command.to_string());
        for k in 1..=n {
            let token = tokens
                .get(i + k)
                .ok_or_else(|| format!("{command} needs {n} numbers"))?;
            let value: f64 = token
                .parse()
                .map_err(|_| format!("{command} expects numbers, got {token:?}"))?;
            if !value.is_finite() {
                return Err(format!("non-finite number {token:?}"));
            }
            out.push(value.to_string());
        }
        i += n + 1;
    }
    Ok(out.join(" "))
}

impl ShapeLibrary {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SHAPES).expect("built-in shape library is well formed")
    }

    /// Parses the line-based library format: `[id] fill` or
    /// `[id] stroke WIDTH` headers, each followed by path lines. `#` starts a
    /// comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::ShapeLibrary { line, message };
        let mut assets: Vec<(usize, String, ShapePaint, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let (id, kind) = rest
                    .split_once(']')
                    .ok_or_else(|| err(line_no, "unterminated asset header".into()))?;
                let id = id.trim();
                if id.is_empty() || id.contains(char::is_whitespace) {
                    return Err(err(line_no, format!("invalid asset id {id:?}")));
                }
                if assets.iter().any(|a| a.1 == id) {
                    return Err(err(line_no, format!("duplicate asset id {id:?}")));
                }
                let words: Vec<&str> = kind.split_whitespace().collect();
                let paint = match words.as_slice() {
                    ["fill"] => ShapePaint::Fill,
                    ["stroke", w] => match w.parse::<f64>() {
                        Ok(width) if width > 0.0 && width.is_finite() => ShapePaint::Stroke { width },
                        _ => return Err(err(line_no, format!("invalid stroke width {w:?}"))),
                    },
                    _ => {
                        return Err(err(
                            line_no,
                            format!("expected `fill` or `stroke WIDTH`, got {:?}", kind.trim()),
                        ))
                    }
                };
                assets.push((line_no, id.to_string(), paint, String::new()));
            } else {
                let current = assets
                    .last_mut()
                    .ok_or_else(|| err(line_no, "path data before the first asset header".into()))?;
                current.3.push(' ');
                current.3.push_str(line);
            }
        }
        if assets.is_empty() {
            return Err(err(0, "library has no assets".into()));
        }
        let assets = assets
            .into_iter()
            .map(|(line_no, id, paint, body)| {
                let path = normalize_path(&body).map_err(|m| err(line_no, format!("asset {id:?}: {m}")))?;
                Ok(ShapeAsset { id, paint, path })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ShapeLibrary { assets })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Serializes back to the library format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.assets {
            match a.paint {
                ShapePaint::Fill => {
                    let _ = writeln!(out, "[{}] fill", a.id);
                }
                ShapePaint::Stroke { width } => {
                    let _ = writeln!(out, "[{}] stroke {width}", a.id);
                }
            }
            let _ = writeln!(out, "{}", a.path);
        }
        out
    }

    pub fn get(&self, id: &str) -> Result<&ShapeAsset> {
        self.assets
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| Error::UnknownShape(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.assets.iter().map(|a| a.id.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MappingMode {
    /// Only listed segments have shapes.
    Explicit,
    /// Unlisted segments get a library asset drawn from a per-index stream.
    Random { seed: u64 },
}

/// Segment index to asset id. Stored as JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeMapping {
    #[serde(flatten)]
    pub mode: MappingMode,
    #[serde(default)]
    pub assignments: BTreeMap<usize, String>,
}

impl ShapeMapping {
    pub fn explicit(assignments: BTreeMap<usize, String>) -> Self {
        ShapeMapping {
            mode: MappingMode::Explicit,
            assignments,
        }
    }

    pub fn random(seed: u64) -> Self {
        ShapeMapping {
            mode: MappingMode::Random { seed },
            assignments: BTreeMap::new(),
        }
    }

    /// Every segment gets the same asset.
    pub fn uniform(segment_count: usize, id: &str) -> Self {
        Self::explicit((0..segment_count).map(|i| (i, id.to_string())).collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("shape mapping: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mapping serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Checks explicit indices against the stencil size and asset ids
    /// against the library.
    pub fn validate(&self, segment_count: usize, library: &ShapeLibrary) -> Result<()> {
        for (&index, id) in &self.assignments {
            if index >= segment_count {
                return Err(Error::IndexOutOfRange {
                    index,
                    len: segment_count,
                });
            }
            library.get(id)?;
        }
        Ok(())
    }

    /// Asset drawn for segment `index`.
    pub fn asset_for<'a>(&self, index: usize, library: &'a ShapeLibrary) -> Result<&'a ShapeAsset> {
        if let Some(id) = self.assignments.get(&index) {
            return library.get(id);
        }
        match self.mode {
            MappingMode::Explicit => Err(Error::UnmappedIndex(index)),
            MappingMode::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(index as u64);
                Ok(&library.assets[rng.random_range(0..library.assets.len())])
            }
        }
    }
}

/// Affine map from the unit frame onto `seg` in grid units, for a stroke
/// height of `height` grid units.
pub fn shape_transform(seg: &Segment, height: f64) -> [f64; 6] {
    let dx = (seg.x2 - seg.x1) as f64;
    let dy = (seg.y2 - seg.y1) as f64;
    let len = dx.hypot(dy);
    [dx, dy, -dy * height / len, dx * height / len, seg.x1 as f64, seg.y1 as f64]
}

fn shape_group(doc: &StencilDocument, mask: &GlyphMask, library: &ShapeLibrary, mapping: &ShapeMapping) -> Result<String> {
    mapping.validate(doc.segments.len(), library)?;
    let height = grid_stroke(doc);
    let mut out = String::new();
    let _ = writeln!(out, "<g transform=\"{}\">", grid_transform(doc));
    for i in mask.active() {
        let asset = mapping.asset_for(i, library)?;
        let [a, b, c, d, e, f] = shape_transform(&doc.segments[i], height);
        let paint = match asset.paint {
            ShapePaint::Fill => "fill=\"black\" fill-rule=\"evenodd\"".to_string(),
            ShapePaint::Stroke { width } => {
                format!("fill=\"none\" stroke=\"black\" stroke-width=\"{width}\" stroke-linecap=\"butt\"")
            }
        };
        let _ = writeln!(
            out,
            "<path data-index=\"{i}\" data-shape=\"{}\" transform=\"matrix({a} {b} {c} {d} {e} {f})\" d=\"{}\" {paint}/>",
            escape(&asset.id),
            asset.path
        );
    }
    out.push_str("</g>\n");
    Ok(out)
}

/// The best expression of `character` with every active segment replaced by
/// its mapped asset.
pub fn assemble_with_shapes(
    doc: &StencilDocument,
    character: char,
    library: &ShapeLibrary,
    mapping: &ShapeMapping,
) -> Result<String> {
    let mask = best_mask(doc, character)?;
    let size = doc.render.canvas_size as f64;
    let mut out = String::new();
    open_svg(&mut out, size, size);
    out.push_str(&shape_group(doc, &mask, library, mapping)?);
    close_svg(&mut out);
    Ok(out)
}

/// Lays `text` out left to right with a fixed advance of canvas width plus
/// `tracking`. Characters without a solution leave an empty advance.
pub fn render_specimen(
    doc: &StencilDocument,
    text: &str,
    shapes: Option<(&ShapeLibrary, &ShapeMapping)>,
    tracking: f64,
) -> Result<String> {
    let size = doc.render.canvas_size as f64;
    let advance = size + tracking;
    if !(advance > 0.0 && advance.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tracking {tracking} leaves no advance on a {size} px canvas"
        )));
    }
    let count = text.chars().count();
    let mut out = String::new();
    open_svg(&mut out, advance * count as f64, size);
    for (k, c) in text.chars().enumerate() {
        if !doc.solutions.contains_key(&c) {
            continue;
        }
        let mask = best_mask(doc, c)?;
        let body = match shapes {
            Some((library, mapping)) => shape_group(doc, &mask, library, mapping)?,
            None => super::svg::mask_group(doc, &mask),
        };
        let _ = writeln!(
            out,
            "<g data-char=\"{}\" transform=\"translate({} 0)\">",
            escape(&c.to_string()),
            advance * k as f64
        );
        out.push_str(&body);
        out.push_str("</g>\n");
    }
    close_svg(&mut out);
    Ok(out)
}
