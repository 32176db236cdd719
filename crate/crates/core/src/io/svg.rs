//! SVG 1.1 exports. Geometry is written in grid coordinates inside one
//! grid-to-page group, so page coordinates match the rasterizer exactly.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::document::StencilDocument;
use crate::error::{Error, Result};
use crate::stencil::{GlyphMask, Segment};

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Stable color for segment `index`.
pub fn segment_color(index: usize) -> String {
    let digest = Sha256::digest((index as u64).to_le_bytes());
    format!("#{}", hex::encode(&digest[..3]))
}

pub(crate) fn open_svg(out: &mut String, width: f64, height: f64) {
    let _ = write!(
        out,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
}

pub(crate) fn close_svg(out: &mut String) {
    out.push_str("</svg>\n");
}

/// Grid-to-page transform of the document's render settings.
pub(crate) fn grid_transform(doc: &StencilDocument) -> String {
    let map = doc.render.mapping(&doc.grid());
    format!("matrix({s} 0 0 {s} {m} {m})", s = map.step, m = map.margin)
}

/// Stroke weight in grid units.
pub(crate) fn grid_stroke(doc: &StencilDocument) -> f64 {
    doc.render.stroke_weight / doc.render.mapping(&doc.grid()).step
}

pub(crate) fn segment_path(seg: &Segment) -> String {
    format!("M {} {} L {} {}", seg.x1, seg.y1, seg.x2, seg.y2)
}

fn page_size(doc: &StencilDocument) -> f64 {
    doc.render.canvas_size as f64
}

/// Every segment, each in its own color.
pub fn export_svg_stencil(doc: &StencilDocument) -> String {
    let size = page_size(doc);
    let mut out = String::new();
    open_svg(&mut out, size, size);
    let _ = writeln!(
        out,
        "<g transform=\"{}\" fill=\"none\" stroke-linecap=\"round\" stroke-width=\"{}\">",
        grid_transform(doc),
        grid_stroke(doc)
    );
    for (i, seg) in doc.segments.iter().enumerate() {
        let _ = writeln!(
            out,
            "<path data-index=\"{i}\" d=\"{}\" stroke=\"{}\"/>",
            segment_path(seg),
            segment_color(i)
        );
    }
    out.push_str("</g>\n");
    close_svg(&mut out);
    out
}

/// Black paths for the active segments of `mask`, without the page wrapper.
pub(crate) fn mask_group(doc: &StencilDocument, mask: &GlyphMask) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<g transform=\"{}\" fill=\"none\" stroke=\"black\" stroke-linecap=\"round\" stroke-width=\"{}\">",
        grid_transform(doc),
        grid_stroke(doc)
    );
    for i in mask.active() {
        let _ = writeln!(out, "<path data-index=\"{i}\" d=\"{}\"/>", segment_path(&doc.segments[i]));
    }
    out.push_str("</g>\n");
    out
}

pub(crate) fn check_mask(doc: &StencilDocument, mask: &GlyphMask) -> Result<()> {
    if mask.len() != doc.segments.len() {
        return Err(Error::MaskLength {
            mask: mask.len(),
            segments: doc.segments.len(),
        });
    }
    Ok(())
}

/// Draws an arbitrary mask, e.g. one of the alternatives of a glyph.
pub fn export_svg_mask(doc: &StencilDocument, mask: &GlyphMask) -> Result<String> {
    check_mask(doc, mask)?;
    let size = page_size(doc);
    let mut out = String::new();
    open_svg(&mut out, size, size);
    out.push_str(&mask_group(doc, mask));
    close_svg(&mut out);
    Ok(out)
}

pub(crate) fn best_mask(doc: &StencilDocument, character: char) -> Result<GlyphMask> {
    let record = doc
        .solutions
        .get(&character)
        .ok_or(Error::MissingSolution(character))?;
    let mask = GlyphMask::from_bitstring(&record.best_mask)
        .ok_or_else(|| Error::InvalidConfig(format!("mask for {character:?} is not a bitstring")))?;
    check_mask(doc, &mask)?;
    Ok(mask)
}

/// The stored best expression of `character`.
pub fn export_svg_glyph(doc: &StencilDocument, character: char) -> Result<String> {
    export_svg_mask(doc, &best_mask(doc, character)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::document::{SolutionRecord, FORMAT_VERSION};
    use crate::raster::RenderSettings;
    use crate::stencil::Bounds;
    use std::collections::BTreeMap;

    pub(crate) fn doc_with(segments: Vec<Segment>, masks: &[(char, &str)]) -> StencilDocument {
        StencilDocument {
            format_version: FORMAT_VERSION,
            grid_density: 10,
            bounds: Bounds { min: 1, max: 40 },
            render: RenderSettings::default(),
            segments,
            solutions: masks
                .iter()
                .map(|&(c, m)| {
                    (
                        c,
                        SolutionRecord {
                            best_mask: m.into(),
                            best_score: 0.5,
                            alternatives: vec![],
                        },
                    )
                })
                .collect(),
            fitness: None,
            provenance: None,
            extra: BTreeMap::new(),
        }
    }

    fn three() -> Vec<Segment> {
        vec![Segment::new(0, 0, 9, 0), Segment::new(0, 0, 0, 9), Segment::new(2, 3, 7, 8)]
    }

    #[test]
    fn stencil_export_has_one_colored_path_per_segment() {
        let doc = doc_with(three(), &[]);
        let svg = export_svg_stencil(&doc);
        assert_eq!(svg.matches("<path").count(), 3);
        assert_eq!(svg, export_svg_stencil(&doc));
        for i in 0..3 {
            assert!(svg.contains(&format!("stroke=\"{}\"", segment_color(i))));
        }
        assert_ne!(segment_color(0), segment_color(1));
        // 64 px canvas, stroke 3: margin 2.5, step 59/9
        assert!(svg.contains(&format!("matrix({s} 0 0 {s} 2.5 2.5)", s = 59.0 / 9.0)));
    }

    #[test]
    fn glyph_export_draws_active_segments_only() {
        let doc = doc_with(three(), &[('A', "000"), ('B', "111"), ('C', "101")]);
        assert_eq!(export_svg_glyph(&doc, 'A').unwrap().matches("<path").count(), 0);
        assert_eq!(export_svg_glyph(&doc, 'B').unwrap().matches("<path").count(), 3);
        let c = export_svg_glyph(&doc, 'C').unwrap();
        assert_eq!(c.matches("<path").count(), 2);
        assert!(c.contains("d=\"M 2 3 L 7 8\""));
        assert!(matches!(export_svg_glyph(&doc, 'Z'), Err(Error::MissingSolution('Z'))));
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("<a&\"'>"), "&lt;a&amp;&quot;&apos;&gt;");
    }
}
