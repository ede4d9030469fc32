//! The single analysis entry point shared by `analyze`, `batch` and the
//! HTTP handler, so every path yields the same report for the same input.

use dropmeter_core::{analyze_card_detailed, Analysis, AnalysisParams, CardGeometry, RgbRaster};

pub const DEFAULT_CARD_WIDTH_MM: f64 = 76.0;
pub const DEFAULT_CARD_HEIGHT_MM: f64 = 26.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CardOptions {
    pub card_width_mm: f64,
    pub card_height_mm: f64,
    pub params: AnalysisParams,
    pub fractal: bool,
}

impl Default for CardOptions {
    fn default() -> Self {
        Self {
            card_width_mm: DEFAULT_CARD_WIDTH_MM,
            card_height_mm: DEFAULT_CARD_HEIGHT_MM,
            params: AnalysisParams::default(),
            fractal: true,
        }
    }
}

impl CardOptions {
    pub fn geometry(&self, image: &RgbRaster) -> CardGeometry {
        CardGeometry {
            card_width_um: self.card_width_mm * 1000.0,
            card_height_um: self.card_height_mm * 1000.0,
            image_width_px: image.width(),
            image_height_px: image.height(),
        }
    }
}

/// UTC, second precision, RFC 3339.
pub fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Analyzes one card and stamps the report's provenance. `input` should be
/// the file's base name so CLI and HTTP reports agree.
pub fn analyze_image(
    image: &RgbRaster,
    opts: &CardOptions,
    input: Option<&str>,
    timestamp: Option<String>,
) -> dropmeter_core::Result<Analysis> {
    let mut analysis = analyze_card_detailed(image, &opts.geometry(image), &opts.params)?;
    if !opts.fractal {
        analysis.report.fractal = None;
    }
    analysis.report.provenance.input = input.map(str::to_owned);
    analysis.report.provenance.timestamp = timestamp;
    Ok(analysis)
}
