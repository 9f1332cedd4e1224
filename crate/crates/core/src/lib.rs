//! Multiscale analysis of long-run GDP growth.
//!
//! The pipeline takes a per-capita GDP series, transforms its logarithm with a
//! slope-calibrated first-derivative Gaussian wavelet, and summarizes the
//! resulting field of local annualized growth rates:
//!
//! - [`ingest`] loads and validates uniformly sampled series,
//! - [`wavelet`] computes the growth-rate field `rho(s, t)` and its cone of influence,
//! - [`skeleton`] extracts per-scale extrema and links them into crest/valley lines,
//! - [`density`] builds kernel densities of growth rates and finds their modes,
//! - [`trend`] fits the long-term exponential growth rate,
//! - [`synthetic`] recompounds a GDP trajectory from skeleton growth rates.
//!
//! Work over scales and density grids runs on rayon when the `parallel`
//! feature is enabled (the default); [`Execution::Sequential`] forces the
//! single-threaded path either way.

// Checks like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
mod exec;
pub mod ingest;
pub mod skeleton;
pub mod synthetic;
pub mod trend;
pub mod wavelet;

pub use exec::Execution;
pub use ingest::{DateConvention, SeriesKind, TimeSeries};
pub use wavelet::{CoiPolicy, ScaleGrid, WaveletField};
