//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Rejected parameter value or inconsistent combination of parameters.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimator was asked to summarize zero samples.
    #[error("empty sample set: {0}")]
    EmptySampleSet(String),

    /// The precoder solve hit a numerically rank-deficient Gram matrix.
    /// Callers treat this as a bad draw and resample the drop.
    #[error("rank-deficient precoding matrix ({rows} antennas, {cols} streams)")]
    RankDeficient { rows: usize, cols: usize },
}
