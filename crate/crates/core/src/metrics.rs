//! Physical units and card-level spray statistics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

pub const MICROMETERS_PER_INCH: f64 = 25_400.0;

/// Largest tolerated relative difference between card and image aspect ratios.
pub const MAX_ASPECT_DEVIATION: f64 = 0.02;

/// Coverage above this percentage makes per-drop statistics questionable.
pub const QUESTIONABLE_COVERAGE_PCT: f64 = 20.0;
/// Coverage above this percentage makes per-drop statistics meaningless.
pub const UNFEASIBLE_COVERAGE_PCT: f64 = 70.0;

/// Physical card size together with the pixel size of its image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardGeometry {
    pub card_width_um: f64,
    pub card_height_um: f64,
    pub image_width_px: usize,
    pub image_height_px: usize,
}

impl CardGeometry {
    /// Standard 76 mm x 26 mm card.
    pub fn standard(image_width_px: usize, image_height_px: usize) -> Self {
        Self {
            card_width_um: 76_000.0,
            card_height_um: 26_000.0,
            image_width_px,
            image_height_px,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.card_width_um > 0.0
            && self.card_height_um > 0.0
            && self.card_width_um.is_finite()
            && self.card_height_um.is_finite()
            && self.image_width_px > 0
            && self.image_height_px > 0;
        if !positive {
            return Err(Error::InvalidParameter(format!(
                "card geometry must be strictly positive: {self:?}"
            )));
        }
        let card_aspect = self.card_width_um / self.card_height_um;
        let image_aspect = self.image_width_px as f64 / self.image_height_px as f64;
        if ((card_aspect - image_aspect) / card_aspect).abs() > MAX_ASPECT_DEVIATION {
            return Err(Error::AspectMismatch {
                card_aspect,
                image_aspect,
            });
        }
        Ok(())
    }

    /// Card surface in square centimeters.
    pub fn area_cm2(&self) -> f64 {
        self.card_width_um * self.card_height_um / 1e8
    }
}

/// Micrometers per pixel, taken along the card width.
pub fn px_to_um_ratio(geom: &CardGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(geom.card_width_um / geom.image_width_px as f64)
}

/// Equivalent-circle diameter in micrometers of a region of `area_px` pixels.
pub fn diameter_from_area(area_px: f64, um_per_px: f64) -> f64 {
    2.0 * (area_px / PI).sqrt() * um_per_px
}

/// Power-law diameter correction `a * d^b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionParams {
    pub a: f64,
    pub b: f64,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        Self {
            a: 0.2192733,
            b: 1.227941,
        }
    }
}

impl CorrectionParams {
    pub fn identity() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidParameter(format!(
                "correction coefficients must be positive, got a={a}, b={b}"
            )))
        }
    }
}

impl std::str::FromStr for CorrectionParams {
    type Err = Error;

    /// Parses `"a,b"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("expected correction as `a,b`, got `{s}`"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        Self::new(a, b)
    }
}

pub fn correct_diameter(d: f64, params: &CorrectionParams) -> f64 {
    params.a * d.powf(params.b)
}

/// Physical measurements of one segmented drop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropletPhysical {
    pub segment_id: u32,
    pub area_um2: f64,
    pub diameter_um: f64,
    pub corrected_diameter_um: f64,
}

impl DropletPhysical {
    pub fn from_pixels(
        segment_id: u32,
        area_px: usize,
        um_per_px: f64,
        correction: &CorrectionParams,
    ) -> Self {
        let diameter_um = diameter_from_area(area_px as f64, um_per_px);
        Self {
            segment_id,
            area_um2: area_px as f64 * um_per_px * um_per_px,
            diameter_um,
            corrected_diameter_um: correct_diameter(diameter_um, correction),
        }
    }
}

/// Card-level statistics. Percentile fields are `None` on a card with no drops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub drop_count: usize,
    pub density_per_cm2: f64,
    pub coverage_pct: f64,
    pub vmd_um: Option<f64>,
    pub dv01_um: Option<f64>,
    pub dv09_um: Option<f64>,
    pub relative_span: Option<f64>,
    pub mean_area_um2: Option<f64>,
}

/// Volume-weighted percentile diameters at each fraction in `ps`.
///
/// For each `p`, returns the smallest diameter whose cumulative volume
/// (drops sorted by diameter, volume proportional to `d^3`) reaches `p` of
/// the total. No interpolation.
pub fn volume_percentiles<const N: usize>(diameters: &[f64], ps: [f64; N]) -> Option<[f64; N]> {
    if diameters.is_empty() {
        return None;
    }
    let mut sorted = diameters.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().map(|d| d * d * d).sum();

    let mut out = [*sorted.last().expect("nonempty"); N];
    let mut cumulative = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // Consume a run of equal diameters at once.
        let d = sorted[i];
        while i < sorted.len() && sorted[i] == d {
            cumulative += d * d * d;
            i += 1;
        }
        for (slot, &p) in out.iter_mut().zip(&ps) {
            if *slot > d && cumulative >= p * total {
                *slot = d;
            }
        }
    }
    Some(out)
}

/// Coverage, density and volumetric percentiles for one card. Coverage comes
/// from the binary mask, not from the segments.
pub fn summarize(
    drops: &[DropletPhysical],
    geom: &CardGeometry,
    mask: &BinaryMask,
) -> SummaryStats {
    let drop_count = drops.len();
    let diameters: Vec<f64> = drops.iter().map(|d| d.diameter_um).collect();
    let percentiles = volume_percentiles(&diameters, [0.1, 0.5, 0.9]);
    let relative_span = percentiles.map(|[d01, d05, d09]| (d09 - d01) / d05);
    let mean_area_um2 =
        (drop_count > 0).then(|| drops.iter().map(|d| d.area_um2).sum::<f64>() / drop_count as f64);

    SummaryStats {
        drop_count,
        density_per_cm2: drop_count as f64 / geom.area_cm2(),
        coverage_pct: 100.0 * mask.foreground_fraction(),
        vmd_um: percentiles.map(|p| p[1]),
        dv01_um: percentiles.map(|p| p[0]),
        dv09_um: percentiles.map(|p| p[2]),
        relative_span,
        mean_area_um2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarningLevel {
    None,
    Questionable,
    Unfeasible,
}

impl std::fmt::Display for WarningLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WarningLevel::None => "none",
            WarningLevel::Questionable => "questionable",
            WarningLevel::Unfeasible => "unfeasible",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageWarning {
    pub level: WarningLevel,
    pub coverage_pct: f64,
}

pub fn coverage_warning(coverage_pct: f64) -> Result<CoverageWarning> {
    if !(0.0..=100.0).contains(&coverage_pct) {
        return Err(Error::InvalidParameter(format!(
            "coverage must lie in [0, 100], got {coverage_pct}"
        )));
    }
    let level = if coverage_pct > UNFEASIBLE_COVERAGE_PCT {
        WarningLevel::Unfeasible
    } else if coverage_pct > QUESTIONABLE_COVERAGE_PCT {
        WarningLevel::Questionable
    } else {
        WarningLevel::None
    };
    Ok(CoverageWarning {
        level,
        coverage_pct,
    })
}

/// Pixels needed to span `diameter_um` at `dpi`, or `None` when the length
/// is under one pixel. Rounds half away from zero.
pub fn min_pixels_for_diameter(diameter_um: f64, dpi: f64) -> Option<u64> {
    let exact = diameter_um * dpi / MICROMETERS_PER_INCH;
    (exact >= 1.0).then(|| exact.round() as u64)
}
