//! End-to-end card analysis and report serialization.

use serde::{Deserialize, Serialize};

use crate::distance::{distance_transform, extract_markers, DEFAULT_MARKER_THRESHOLD};
use crate::error::{Error, Result};
use crate::fractal::{fractal_dimension, FractalEstimate};
use crate::metrics::{
    coverage_warning, px_to_um_ratio, summarize, CardGeometry, CorrectionParams, CoverageWarning,
    DropletPhysical, SummaryStats,
};
use crate::raster::{
    binarize, check_unit, to_grayscale, BinaryMask, RgbRaster, DEFAULT_BIN_THRESHOLD,
};
use crate::segment::{label_markers, watershed, DropletSegment, SegmentationResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tunable pipeline parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub bin_threshold: f64,
    pub marker_threshold: f64,
    pub correction: CorrectionParams,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        Self {
            bin_threshold: DEFAULT_BIN_THRESHOLD,
            marker_threshold: DEFAULT_MARKER_THRESHOLD,
            correction: CorrectionParams::default(),
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        check_unit("binarization threshold", self.bin_threshold)?;
        check_unit("marker threshold", self.marker_threshold)?;
        CorrectionParams::new(self.correction.a, self.correction.b)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub bin_threshold: f64,
    pub marker_threshold: f64,
    pub geometry: CardGeometry,
    pub um_per_px: f64,
    pub correction: CorrectionParams,
}

/// One measured droplet, in pixel and physical units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: u32,
    pub pixel_area: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
    /// Inclusive `[x0, y0, x1, y1]`.
    pub bbox: [usize; 4],
    pub area_um2: f64,
    pub diameter_um: f64,
    pub corrected_diameter_um: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: Option<String>,
    pub timestamp: Option<String>,
    pub tool_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CardAnalysisReport {
    pub parameters: ReportParameters,
    pub drops: Vec<DropRecord>,
    pub summary: SummaryStats,
    pub warning: CoverageWarning,
    /// Absent when the card has no droplet pixels.
    pub fractal: Option<FractalEstimate>,
    pub provenance: Provenance,
}

/// A report together with the intermediate rasters used to build it.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub report: CardAnalysisReport,
    pub mask: BinaryMask,
    pub segmentation: SegmentationResult,
}

/// Runs the full pipeline: luma, binarization, distance transform, markers,
/// watershed, then card statistics, coverage warning and fractal dimension.
pub fn analyze_card_detailed(
    image: &RgbRaster,
    geom: &CardGeometry,
    params: &AnalysisParams,
) -> Result<Analysis> {
    params.validate()?;
    let actual = (image.width(), image.height());
    if actual != (geom.image_width_px, geom.image_height_px) {
        return Err(Error::DimensionMismatch {
            expected: (geom.image_width_px, geom.image_height_px),
            actual,
        });
    }
    let um_per_px = px_to_um_ratio(geom)?;

    let gray = to_grayscale(image);
    let mask = binarize(&gray, params.bin_threshold)?;
    let dist = distance_transform(&mask);
    let markers = label_markers(&extract_markers(&dist, params.marker_threshold)?);
    let segmentation = watershed(&gray, &markers, &mask)?;

    let physical: Vec<DropletPhysical> = segmentation
        .segments
        .iter()
        .map(|s| DropletPhysical::from_pixels(s.id, s.pixel_area, um_per_px, &params.correction))
        .collect();
    let drops = segmentation
        .segments
        .iter()
        .zip(&physical)
        .map(|(s, p)| drop_record(s, p))
        .collect();

    let summary = summarize(&physical, geom, &mask);
    let warning = coverage_warning(summary.coverage_pct)?;
    let fractal = match fractal_dimension(&mask) {
        Ok(est) => Some(est),
        Err(Error::EmptyMask) => None,
        Err(e) => return Err(e),
    };

    let report = CardAnalysisReport {
        parameters: ReportParameters {
            bin_threshold: params.bin_threshold,
            marker_threshold: params.marker_threshold,
            geometry: *geom,
            um_per_px,
            correction: params.correction,
        },
        drops,
        summary,
        warning,
        fractal,
        provenance: Provenance {
            input: None,
            timestamp: None,
            tool_version: TOOL_VERSION.to_string(),
        },
    };
    Ok(Analysis {
        report,
        mask,
        segmentation,
    })
}

pub fn analyze_card(
    image: &RgbRaster,
    geom: &CardGeometry,
    params: &AnalysisParams,
) -> Result<CardAnalysisReport> {
    analyze_card_detailed(image, geom, params).map(|a| a.report)
}

fn drop_record(seg: &DropletSegment, phys: &DropletPhysical) -> DropRecord {
    let (x0, y0, x1, y1) = seg.bounding_box;
    DropRecord {
        id: seg.id,
        pixel_area: seg.pixel_area,
        centroid_x: seg.centroid.0,
        centroid_y: seg.centroid.1,
        bbox: [x0, y0, x1, y1],
        area_um2: phys.area_um2,
        diameter_um: phys.diameter_um,
        corrected_diameter_um: phys.corrected_diameter_um,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format `{other}`"
            ))),
        }
    }
}

/// Column names of the per-card summary row.
pub const SUMMARY_COLUMNS: [&str; 10] = [
    "drops",
    "area_um2",
    "density_per_cm2",
    "coverage_pct",
    "vmd_um",
    "relative_span",
    "dv01_um",
    "dv09_um",
    "warning",
    "fractal_dimension",
];

pub const DROP_COLUMNS: [&str; 11] = [
    "id",
    "pixel_area",
    "centroid_x",
    "centroid_y",
    "x0",
    "y0",
    "x1",
    "y1",
    "area_um2",
    "diameter_um",
    "corrected_diameter_um",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Summary fields in [`SUMMARY_COLUMNS`] order.
pub fn summary_row(report: &CardAnalysisReport) -> Vec<String> {
    let s = &report.summary;
    vec![
        s.drop_count.to_string(),
        opt(s.mean_area_um2),
        s.density_per_cm2.to_string(),
        s.coverage_pct.to_string(),
        opt(s.vmd_um),
        opt(s.relative_span),
        opt(s.dv01_um),
        opt(s.dv09_um),
        report.warning.level.to_string(),
        opt(report.fractal.map(|f| f.dimension)),
    ]
}

pub fn to_json(report: &CardAnalysisReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn from_json(text: &str) -> Result<CardAnalysisReport> {
    serde_json::from_str(text).map_err(|e| Error::Serialize(e.to_string()))
}

/// Summary header and row, a blank line, then one row per drop.
pub fn to_csv(report: &CardAnalysisReport) -> Result<String> {
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary.write_record(SUMMARY_COLUMNS).map_err(ser)?;
    summary.write_record(summary_row(report)).map_err(ser)?;

    let mut drops = csv::Writer::from_writer(Vec::new());
    drops.write_record(DROP_COLUMNS).map_err(ser)?;
    for d in &report.drops {
        drops
            .write_record([
                d.id.to_string(),
                d.pixel_area.to_string(),
                d.centroid_x.to_string(),
                d.centroid_y.to_string(),
                d.bbox[0].to_string(),
                d.bbox[1].to_string(),
                d.bbox[2].to_string(),
                d.bbox[3].to_string(),
                d.area_um2.to_string(),
                d.diameter_um.to_string(),
                d.corrected_diameter_um.to_string(),
            ])
            .map_err(ser)?;
    }

    let into_bytes =
        |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| Error::Serialize(e.to_string()));
    let mut bytes = into_bytes(summary)?;
    bytes.push(b'\n');
    bytes.extend(into_bytes(drops)?);
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn export_report(report: &CardAnalysisReport, format: ExportFormat) -> Result<Vec<u8>> {
    let text = match format {
        ExportFormat::Json => to_json(report)?,
        ExportFormat::Csv => to_csv(report)?,
    };
    Ok(text.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::WarningLevel;
    use crate::synth::{generate_card, SyntheticCardSpec};

    fn analyze_spec(spec: &SyntheticCardSpec) -> CardAnalysisReport {
        let (card, _) = generate_card(spec).unwrap();
        let geom = CardGeometry {
            card_width_um: spec.card_width_um,
            card_height_um: spec.card_height_um,
            image_width_px: card.width(),
            image_height_px: card.height(),
        };
        analyze_card(&card, &geom, &AnalysisParams::default()).unwrap()
    }

    #[test]
    fn blank_card_report() {
        let report = analyze_spec(&SyntheticCardSpec::new(76_000.0, 26_000.0, 300.0));
        assert_eq!(report.summary.drop_count, 0);
        assert_eq!(report.summary.coverage_pct, 0.0);
        assert_eq!(report.warning.level, WarningLevel::None);
        assert!(report.fractal.is_none());
        let json = to_json(&report).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["drops"], serde_json::json!([]));
    }

    #[test]
    fn ten_disk_card() {
        let mut spec = SyntheticCardSpec::new(76_000.0, 26_000.0, 1200.0).with_disks(500.0, 10);
        spec.min_gap_px = 2.0;
        spec.seed = 10;
        let report = analyze_spec(&spec);
        assert_eq!(report.summary.drop_count, 10);
        let mean = report.drops.iter().map(|d| d.diameter_um).sum::<f64>() / 10.0;
        assert!((mean - 500.0).abs() / 500.0 <= 0.02, "mean {mean}");
        assert_eq!(report.drops.len(), report.summary.drop_count);
        for d in &report.drops {
            assert!(d.corrected_diameter_um > 0.0);
            assert_ne!(d.corrected_diameter_um, d.diameter_um);
        }
    }

    #[test]
    fn json_round_trip_and_csv_shape() {
        let mut spec = SyntheticCardSpec::new(10_000.0, 5_000.0, 600.0).with_disks(600.0, 6);
        spec.min_gap_px = 2.0;
        let report = analyze_spec(&spec);
        let back = from_json(&to_json(&report).unwrap()).unwrap();
        assert_eq!(back, report);

        let csv_text = to_csv(&report).unwrap();
        let lines: Vec<&str> = csv_text.lines().collect();
        assert_eq!(lines[0], SUMMARY_COLUMNS.join(","));
        assert!(lines[1].starts_with("6,"));
        assert_eq!(lines[2], "");
        assert_eq!(lines[3], DROP_COLUMNS.join(","));
        assert_eq!(lines.len(), 4 + report.drops.len());
    }

    #[test]
    fn rejects_bad_params_and_dims() {
        let img = RgbRaster::filled(30, 10, [1.0; 3]).unwrap();
        let geom = CardGeometry {
            card_width_um: 3_000.0,
            card_height_um: 1_000.0,
            image_width_px: 30,
            image_height_px: 10,
        };
        let bad = AnalysisParams {
            bin_threshold: 1.5,
            ..AnalysisParams::default()
        };
        assert!(analyze_card(&img, &geom, &bad)
            .unwrap_err()
            .is_parameter_error());
        let wrong = CardGeometry {
            image_width_px: 31,
            ..geom
        };
        assert!(analyze_card(&img, &wrong, &AnalysisParams::default()).is_err());
        assert!(analyze_card(&img, &geom, &AnalysisParams::default()).is_ok());
    }

    #[test]
    fn format_parsing() {
        assert_eq!("JSON".parse::<ExportFormat>().unwrap(), ExportFormat::Json);
        assert_eq!("csv".parse::<ExportFormat>().unwrap(), ExportFormat::Csv);
        assert!("xml".parse::<ExportFormat>().is_err());
    }
}
