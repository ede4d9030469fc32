//! Raster containers and the first two pipeline steps: luma reduction and
//! binarization.
//!
//! All rasters are stored row-major with `index = y * width + x`.

use crate::error::{Error, Result};

/// Default binarization threshold (90 on an 8-bit scale).
pub const DEFAULT_BIN_THRESHOLD: f64 = 0.35;

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "raster dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidParameter(format!(
            "{width}x{height} raster needs {} pixels, got {len}",
            width.saturating_mul(height)
        )));
    }
    Ok(())
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ThresholdOutOfRange { name, value })
    }
}

/// Color image with channels normalized to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbRaster {
    width: usize,
    height: usize,
    pixels: Vec<[f32; 3]>,
}

impl RgbRaster {
    pub fn new(width: usize, height: usize, pixels: Vec<[f32; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        if let Some(bad) = pixels.iter().flatten().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidParameter(format!(
                "channel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::new(width, height, vec![rgb; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[f32; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        self.pixels[y * self.width + x]
    }

    /// Overwrites one pixel; channels are clamped into `[0, 1]`.
    pub fn set(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        self.pixels[y * self.width + x] = rgb.map(|c| c.clamp(0.0, 1.0));
    }
}

/// Single-channel intensity image, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

/// Boolean image; `true` marks a droplet (foreground) pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// All-background mask.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width.saturating_mul(height)])
    }

    /// Builds a mask from rows of `'#'` (foreground) and any other character.
    /// Handy for fixtures.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut values = Vec::with_capacity(width * height);
        for row in rows {
            if row.chars().count() != width {
                return Err(Error::InvalidParameter("ragged ascii mask".into()));
            }
            values.extend(row.chars().map(|c| c == '#'));
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.values[y * self.width + x] = value;
    }

    pub fn foreground_count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Fraction of pixels that are foreground, in `[0, 1]`.
    pub fn foreground_fraction(&self) -> f64 {
        self.foreground_count() as f64 / self.values.len() as f64
    }
}

/// Boolean image of high-confidence droplet cores.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkerMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl MarkerMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}

impl From<BinaryMask> for MarkerMask {
    fn from(mask: BinaryMask) -> Self {
        Self {
            width: mask.width,
            height: mask.height,
            values: mask.values,
        }
    }
}

/// Weighted luma reduction, `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &RgbRaster) -> GrayRaster {
    let values = img
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let luma = LUMA_R * f64::from(r) + LUMA_G * f64::from(g) + LUMA_B * f64::from(b);
            luma.clamp(0.0, 1.0) as f32
        })
        .collect();
    GrayRaster {
        width: img.width,
        height: img.height,
        values,
    }
}

/// Marks pixels strictly darker than `threshold` as droplet pixels.
pub fn binarize(img: &GrayRaster, threshold: f64) -> Result<BinaryMask> {
    check_unit("binarization threshold", threshold)?;
    // Compare at storage precision so a stored 0.35 is not below a 0.35 threshold.
    let threshold = threshold as f32;
    let values = img.values.iter().map(|&v| v < threshold).collect();
    Ok(BinaryMask {
        width: img.width,
        height: img.height,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(rgb: [f32; 3]) -> f32 {
        to_grayscale(&RgbRaster::filled(1, 1, rgb).unwrap()).get(0, 0)
    }

    #[test]
    fn grayscale_known_pixels() {
        assert_eq!(single([1.0, 1.0, 1.0]), 1.0);
        assert_eq!(single([0.0, 0.0, 0.0]), 0.0);
        assert!((single([1.0, 0.0, 0.0]) - 0.299).abs() < 1e-6);
        assert!((single([0.0, 1.0, 0.0]) - 0.587).abs() < 1e-6);
        assert!((single([0.0, 0.0, 1.0]) - 0.114).abs() < 1e-6);
    }

    #[test]
    fn binarize_strict_inequality() {
        let gray = GrayRaster::new(2, 1, vec![0.34, 0.35]).unwrap();
        let mask = binarize(&gray, 0.35).unwrap();
        assert!(mask.get(0, 0));
        assert!(!mask.get(1, 0));
    }

    #[test]
    fn binarize_white_image_is_background() {
        let gray = to_grayscale(&RgbRaster::filled(8, 4, [1.0; 3]).unwrap());
        let mask = binarize(&gray, DEFAULT_BIN_THRESHOLD).unwrap();
        assert_eq!(mask.foreground_count(), 0);
    }

    #[test]
    fn binarize_rejects_bad_threshold() {
        let gray = GrayRaster::new(1, 1, vec![0.5]).unwrap();
        assert!(matches!(
            binarize(&gray, 1.5),
            Err(Error::ThresholdOutOfRange { .. })
        ));
        assert!(binarize(&gray, -0.01).is_err());
        assert!(binarize(&gray, f64::NAN).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(RgbRaster::new(0, 1, vec![]).is_err());
        assert!(RgbRaster::new(2, 2, vec![[0.0; 3]; 3]).is_err());
        assert!(RgbRaster::new(1, 1, vec![[1.2, 0.0, 0.0]]).is_err());
        assert!(GrayRaster::new(1, 1, vec![-0.1]).is_err());
        assert!(BinaryMask::from_ascii(&["#.", "#"]).is_err());
    }

    proptest! {
        #[test]
        fn grayscale_is_monotone_per_channel(
            rgb in prop::array::uniform3(0.0f32..=1.0),
            channel in 0usize..3,
            bump in 0.0f32..=1.0,
        ) {
            let mut brighter = rgb;
            brighter[channel] = (brighter[channel] + bump).min(1.0);
            prop_assert!(single(brighter) >= single(rgb));
        }

        #[test]
        fn uniform_side_of_threshold_gives_uniform_mask(
            t in 0.05f64..0.95,
            offsets in prop::collection::vec(0.001f64..0.05, 12),
            dark in any::<bool>(),
        ) {
            let pixels: Vec<[f32; 3]> = offsets
                .iter()
                .map(|o| {
                    let v = if dark { t - o - 1e-4 } else { t + o + 1e-4 };
                    [v.clamp(0.0, 1.0) as f32; 3]
                })
                .collect();
            let img = RgbRaster::new(4, 3, pixels).unwrap();
            let mask = binarize(&to_grayscale(&img), t).unwrap();
            let expected = if dark { 12 } else { 0 };
            prop_assert_eq!(mask.foreground_count(), expected);
        }
    }
}
