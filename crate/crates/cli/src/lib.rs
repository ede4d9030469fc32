//! Command-line and HTTP front end for `dropmeter-core`.
//!
//! The `dropmeter` binary wraps the modules here; they are exposed as a
//! library so the integration tests can drive the server in-process.

pub mod batch;
pub mod dpi;
pub mod pipeline;
pub mod server;

pub use pipeline::{analyze_image, timestamp_now, CardOptions};
