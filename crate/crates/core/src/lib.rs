//! Distantly-supervised engagingness dataset curation.
//!
//! Comment dumps are reduced to (context, response) pairs, scored on four
//! reaction dimensions, exposure-adjusted, normalized, aggregated and
//! labeled by z-score. The [`eval`] module correlates any metric with
//! human judgments.

pub mod aggregate;
pub mod dataset;
pub mod dims;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod median;
pub mod pipeline;
pub mod popularity;
pub mod sidecar;
pub mod text;

pub use error::{Error, Result};
