//! Visualization of a segmentation over the original card.

use crate::error::{Error, Result};
use crate::raster::RgbRaster;
use crate::segment::{SegmentationResult, FLOOD_NEIGHBORS};

/// Opacity of the segment fill; boundary pixels are drawn fully opaque.
pub const FILL_OPACITY: f32 = 0.5;

/// Deterministic, well-spread color for a droplet id.
pub fn segment_color(id: u32) -> [f32; 3] {
    const GOLDEN: f64 = 0.618_033_988_749_895;
    let hue = (f64::from(id) * GOLDEN).fract() * 6.0;
    let (s, v) = (0.85, 0.95);
    let sector = hue.floor();
    let f = hue - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector as u32 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [r as f32, g as f32, b as f32]
}

/// Paints each segment over `image`: a translucent fill with an opaque
/// outline. Unlabeled pixels are left untouched.
pub fn render_overlay(image: &RgbRaster, result: &SegmentationResult) -> Result<RgbRaster> {
    let (w, h) = (image.width(), image.height());
    if (result.width(), result.height()) != (w, h) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            actual: (result.width(), result.height()),
        });
    }
    let labels = result.labels();
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            let label = labels[y * w + x];
            if label == 0 {
                continue;
            }
            let color = segment_color(label);
            let boundary = FLOOD_NEIGHBORS.iter().any(|&(dx, dy)| {
                match (x.checked_add_signed(dx), y.checked_add_signed(dy)) {
                    (Some(nx), Some(ny)) if nx < w && ny < h => labels[ny * w + nx] != label,
                    _ => true,
                }
            });
            let painted = if boundary {
                color
            } else {
                let orig = image.get(x, y);
                [0, 1, 2].map(|c| orig[c] * (1.0 - FILL_OPACITY) + color[c] * FILL_OPACITY)
            };
            out.set(x, y, painted);
        }
    }
    Ok(out)
}
