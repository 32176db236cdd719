//! Files and exports: stencil documents, SVG, PNG and shape replacement.

pub mod document;
pub mod png;
pub mod shapes;
pub mod svg;

pub use document::{load_stencil, save_stencil, Provenance, StencilDocument};
pub use shapes::{assemble_with_shapes, render_specimen, ShapeLibrary, ShapeMapping};
pub use svg::{export_svg_glyph, export_svg_mask, export_svg_stencil};
