//! Droplet segmentation and spray-coverage metrics for water-sensitive cards.
//!
//! The pipeline reduces a card image to luma, binarizes it, computes an exact
//! Euclidean distance transform of the droplet pixels, keeps the deepest
//! pixels as markers, and floods from those markers to separate touching
//! droplets. Each droplet's pixel area becomes an equivalent-circle diameter,
//! from which the card statistics (coverage, density, volumetric percentile
//! diameters, relative span) and a box-counting dimension are derived.
//!
//! ```no_run
//! use dropmeter_core::{analyze_card, decode_image, AnalysisParams, CardGeometry};
//!
//! let image = decode_image("card.png".as_ref())?;
//! let geom = CardGeometry::standard(image.width(), image.height());
//! let report = analyze_card(&image, &geom, &AnalysisParams::default())?;
//! println!("{} drops, {:.2}% coverage", report.summary.drop_count, report.summary.coverage_pct);
//! # Ok::<(), dropmeter_core::Error>(())
//! ```

pub mod distance;
pub mod error;
pub mod fractal;
pub mod io;
pub mod metrics;
pub mod overlay;
pub mod raster;
pub mod report;
pub mod segment;
pub mod synth;

#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use distance::{
    distance_transform, euclidean_distances, extract_markers, DistanceMap, DEFAULT_MARKER_THRESHOLD,
};
pub use error::{Error, Result};
pub use fractal::{box_count, fractal_dimension, BoxCountSeries, FractalEstimate};
pub use io::{decode_bytes, decode_image, encode_png, write_png};
pub use metrics::{
    correct_diameter, coverage_warning, diameter_from_area, min_pixels_for_diameter,
    px_to_um_ratio, summarize, CardGeometry, CorrectionParams, CoverageWarning, DropletPhysical,
    SummaryStats, WarningLevel,
};
pub use overlay::render_overlay;
pub use raster::{
    binarize, to_grayscale, BinaryMask, GrayRaster, MarkerMask, RgbRaster, DEFAULT_BIN_THRESHOLD,
};
pub use report::{
    analyze_card, analyze_card_detailed, export_report, Analysis, AnalysisParams,
    CardAnalysisReport, ExportFormat,
};
pub use segment::{
    label_markers, measure_segments, watershed, DropletSegment, LabeledMarkers, SegmentationResult,
};
pub use synth::{generate_card, GroundTruth, SyntheticCardSpec};
