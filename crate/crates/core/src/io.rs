//! Image decoding and encoding. PNG and binary PGM/PPM are accepted on
//! input; output is always 8-bit RGB PNG.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::raster::RgbRaster;

pub fn decode_image(path: &Path) -> Result<RgbRaster> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_bytes(&bytes)
}

/// Decodes PNG or PNM bytes into a normalized raster.
pub fn decode_bytes(bytes: &[u8]) -> Result<RgbRaster> {
    let format = image::guess_format(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(Error::Decode(format!(
            "unsupported image format {format:?}"
        )));
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::Decode(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Decode("image has zero width or height".into()));
    }
    let pixels = rgb
        .pixels()
        .map(|p| p.0.map(|c| f32::from(c) / 255.0))
        .collect();
    RgbRaster::new(w, h, pixels)
}

fn to_rgb8(raster: &RgbRaster) -> RgbImage {
    let mut buf = Vec::with_capacity(raster.pixels().len() * 3);
    for px in raster.pixels() {
        buf.extend(px.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    RgbImage::from_raw(raster.width() as u32, raster.height() as u32, buf)
        .expect("buffer sized from raster dimensions")
}

pub fn encode_png(raster: &RgbRaster) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    to_rgb8(raster)
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn write_png(raster: &RgbRaster, path: &Path) -> Result<()> {
    let bytes = encode_png(raster)?;
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
