use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must lie in [0, 1], got {value}")]
    ThresholdOutOfRange { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("raster dimensions disagree: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("marker pixel ({x}, {y}) lies outside the foreground mask")]
    MarkerOutsideMask { x: usize, y: usize },

    #[error(
        "card aspect ratio {card_aspect:.4} and image aspect ratio {image_aspect:.4} differ by more than 2%; \
         the image looks distorted or the card size is wrong"
    )]
    AspectMismatch { card_aspect: f64, image_aspect: f64 },

    #[error("fractal dimension is undefined for an empty mask")]
    EmptyMask,

    #[error("invalid synthetic card spec: {0}")]
    Spec(String),

    #[error("could not place disk {index} ({diameter_um} um) after {attempts} attempts")]
    Capacity {
        index: usize,
        diameter_um: f64,
        attempts: usize,
    },

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not decode image: {0}")]
    Decode(String),

    #[error("could not encode image: {0}")]
    Encode(String),

    #[error("report serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    /// True for errors caused by caller-supplied parameters rather than by the input data.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::ThresholdOutOfRange { .. }
                | Error::InvalidParameter(_)
                | Error::AspectMismatch { .. }
                | Error::Spec(_)
                | Error::Capacity { .. }
        )
    }
}
