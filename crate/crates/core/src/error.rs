//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction, oracles, estimation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An SCM specification violates a structural invariant.
    #[error("invalid SCM spec: {0}")]
    Spec(String),

    /// The SCM text format failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A mechanism could not be evaluated (names the offending variable).
    #[error("evaluation error: {0}")]
    Eval(String),

    /// An oracle query was ill-posed (empty conditioning event, degenerate
    /// odds, continuous noise in exact mode, ...).
    #[error("oracle error: {0}")]
    Oracle(String),

    /// Dataset construction or validation failed.
    #[error("data error: {0}")]
    Data(String),

    /// Nuisance fitting or effect estimation failed.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Hypothesis testing failed (degenerate standard error, ...).
    #[error("inference error: {0}")]
    Inference(String),

    /// The request itself is unsupported (e.g. non-identifiable measures).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
