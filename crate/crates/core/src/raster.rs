//! Rasterization of masked stencils and the pixel similarity metric.
//!
//! Canvases hold grayscale values in `[0, 1]` with 0 = black ink and
//! 1 = white ground. Strokes are hard-edged capsules: a pixel is inked when
//! its center lies within `stroke_weight / 2` of the segment.
//!
//! Squared errors are accumulated in fixed point (see [`ERROR_SCALE`]) so the
//! sum does not depend on summation order. This lets the incremental search
//! in [`crate::search`] reproduce [`rmse`] bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{GlyphMask, GridSpec, Segment, Stencil};

/// Fixed-point scale for per-pixel squared errors (2^52).
pub const ERROR_SCALE: f64 = 4_503_599_627_370_496.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Canvas {
    size: usize,
    pixels: Vec<f64>,
}

impl Canvas {
    pub fn white(size: usize) -> Self {
        Canvas {
            size,
            pixels: vec![1.0; size * size],
        }
    }

    pub fn filled(size: usize, value: f64) -> Self {
        Canvas {
            size,
            pixels: vec![value.clamp(0.0, 1.0); size * size],
        }
    }

    /// Wraps raw pixel values, clamping them into `[0, 1]`.
    pub fn from_pixels(size: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != size * size {
            return Err(Error::SizeMismatch {
                left: pixels.len(),
                right: size * size,
            });
        }
        let pixels = pixels.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(Canvas { size, pixels })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.size + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.pixels[y * self.size + x] = value.clamp(0.0, 1.0);
    }

    /// Count of pixels darker than mid-gray.
    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p < 0.5).count()
    }

    /// 8-bit grayscale samples, row-major.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| (p * 255.0).round() as u8)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    pub canvas_size: usize,
    /// Stroke diameter in pixels.
    pub stroke_weight: f64,
}

impl RenderSettings {
    pub fn new(canvas_size: usize, stroke_weight: f64) -> Result<Self> {
        let s = RenderSettings {
            canvas_size,
            stroke_weight,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.canvas_size < 8 {
            return Err(Error::InvalidConfig(format!(
                "canvas size must be at least 8 px, got {}",
                self.canvas_size
            )));
        }
        if !(self.stroke_weight > 0.0 && self.stroke_weight.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "stroke weight must be positive, got {}",
                self.stroke_weight
            )));
        }
        if self.margin() * 2.0 >= self.canvas_size as f64 {
            return Err(Error::InvalidConfig(format!(
                "stroke weight {} leaves no drawable area on a {} px canvas",
                self.stroke_weight, self.canvas_size
            )));
        }
        Ok(())
    }

    /// Uniform border between the canvas edge and the outermost grid line.
    pub fn margin(&self) -> f64 {
        self.stroke_weight / 2.0 + 1.0
    }

    pub fn mapping(&self, grid: &GridSpec) -> GridMapping {
        let margin = self.margin();
        GridMapping {
            margin,
            step: (self.canvas_size as f64 - 2.0 * margin) / (grid.density - 1) as f64,
        }
    }
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            canvas_size: 64,
            stroke_weight: 3.0,
        }
    }
}

/// Affine grid-to-canvas map: `p = margin + step * g` on both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMapping {
    pub margin: f64,
    pub step: f64,
}

impl GridMapping {
    #[inline]
    pub fn to_canvas(&self, gx: i32, gy: i32) -> (f64, f64) {
        (
            self.margin + self.step * gx as f64,
            self.margin + self.step * gy as f64,
        )
    }
}

#[inline]
fn dist2_to_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (ax + t * dx - px, ay + t * dy - py);
    cx * cx + cy * cy
}

/// Row-major indices of the pixels inked by one segment, ascending.
pub fn segment_pixels(seg: &Segment, grid: &GridSpec, settings: &RenderSettings) -> Vec<u32> {
    let map = settings.mapping(grid);
    let (ax, ay) = map.to_canvas(seg.x1, seg.y1);
    let (bx, by) = map.to_canvas(seg.x2, seg.y2);
    let r = settings.stroke_weight / 2.0;
    let r2 = r * r;
    let size = settings.canvas_size;
    let lo = |v: f64| ((v - r - 1.0).floor().max(0.0)) as usize;
    let hi = |v: f64| ((v + r + 1.0).ceil().max(0.0) as usize).min(size);
    let (x0, x1) = (lo(ax.min(bx)), hi(ax.max(bx)));
    let (y0, y1) = (lo(ay.min(by)), hi(ay.max(by)));
    let mut out = Vec::new();
    for y in y0..y1 {
        let py = y as f64 + 0.5;
        for x in x0..x1 {
            let px = x as f64 + 0.5;
            if dist2_to_segment(px, py, ax, ay, bx, by) <= r2 {
                out.push((y * size + x) as u32);
            }
        }
    }
    out
}

/// Draws the active segments of `mask` in black on a white canvas.
pub fn render(stencil: &Stencil, mask: &GlyphMask, settings: &RenderSettings) -> Result<Canvas> {
    if mask.len() != stencil.len() {
        return Err(Error::MaskLength {
            mask: mask.len(),
            segments: stencil.len(),
        });
    }
    let mut canvas = Canvas::white(settings.canvas_size);
    for index in mask.active() {
        for p in segment_pixels(&stencil.segments[index], &stencil.grid, settings) {
            canvas.pixels[p as usize] = 0.0;
        }
    }
    Ok(canvas)
}

/// Render of the stored best mask for `character`.
pub fn render_expression(
    stencil: &Stencil,
    character: char,
    settings: &RenderSettings,
) -> Result<Canvas> {
    let solution = stencil.solution(character)?;
    render(stencil, &solution.best_mask, settings)
}

/// Squared error of one pixel pair in fixed point.
#[inline]
pub fn quantized_sq_error(a: f64, b: f64) -> u64 {
    let d = a - b;
    (d * d * ERROR_SCALE).round() as u64
}

/// Root-mean-square error from a fixed-point sum of squared errors.
#[inline]
pub fn rmse_from_sum(sum: u128, pixel_count: usize) -> f64 {
    ((sum as f64 / ERROR_SCALE) / pixel_count as f64).sqrt()
}

#[inline]
pub fn score_from_sum(sum: u128, pixel_count: usize) -> f64 {
    1.0 - rmse_from_sum(sum, pixel_count)
}

pub fn rmse(a: &Canvas, b: &Canvas) -> Result<f64> {
    if a.size != b.size {
        return Err(Error::SizeMismatch {
            left: a.size,
            right: b.size,
        });
    }
    let sum: u128 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| quantized_sq_error(x, y) as u128)
        .sum();
    Ok(rmse_from_sum(sum, a.pixels.len()))
}

/// `1 - rmse(render(stencil, mask), target)`.
pub fn glyph_score(
    stencil: &Stencil,
    mask: &GlyphMask,
    target: &Canvas,
    settings: &RenderSettings,
) -> Result<f64> {
    let canvas = render(stencil, mask, settings)?;
    Ok(1.0 - rmse(&canvas, target)?)
}
