//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by dataset generation, density computations, classifiers
/// and embeddings.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: non-chaining layer specs, bad control
    /// parameters, missing required settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// Matrix or vector dimensions do not match the operation's contract.
    #[error("shape error: {0}")]
    Shape(String),

    /// A value lies outside the operation's domain (e.g. a correlation
    /// quantity outside [0, 2], a split fraction outside (0, 1)).
    #[error("domain error: {0}")]
    Domain(String),

    /// Numeric failure: NaN/Inf inputs, non-converging decomposition,
    /// insufficient integration coverage.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Input data violates a precondition (empty dataset, class with too
    /// few samples).
    #[error("input error: {0}")]
    Input(String),

    /// A model could not be fitted on the given training data.
    #[error("fit error: {0}")]
    Fit(String),

    /// A file does not conform to its declared format (IDX magic, CSV
    /// layout, model container header).
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
