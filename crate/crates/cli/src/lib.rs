//! Command-line driver for the growthscope analysis: configuration, the
//! end-to-end pipeline, report assembly and SVG figures.

// Checks like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod figures;
pub mod pipeline;

pub use config::{AnalyzeArgs, PipelineConfig};
pub use error::CliError;
pub use pipeline::{analyze, run_pipeline, Analysis, Report};

/// Path of the JSON schema every `report.json` conforms to.
pub const REPORT_SCHEMA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json");
