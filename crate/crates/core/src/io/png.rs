use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::Canvas;

/// 8-bit grayscale PNG of a canvas.
pub fn encode_png(canvas: &Canvas) -> Result<Vec<u8>> {
    let size = canvas.size() as u32;
    let mut bytes = Vec::new();
    let mut encoder = png::Encoder::new(&mut bytes, size, size);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| Error::Png(e.to_string()))?;
    writer
        .write_image_data(&canvas.to_gray8())
        .map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))?;
    Ok(bytes)
}

pub fn write_png(canvas: &Canvas, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_png(canvas)?).map_err(|e| Error::io(path, e))
}
