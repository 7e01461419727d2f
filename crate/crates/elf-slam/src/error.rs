//! Crate-wide error type.

/// Errors produced by any stage of the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A signal or buffer has the wrong length.
    #[error("length error: {0}")]
    Length(String),

    /// A matrix or tensor has the wrong shape.
    #[error("shape error: {0}")]
    Shape(String),

    /// A geometric precondition failed (point outside room, degenerate polygon).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A sequence of edges or records is not index-consecutive.
    #[error("sequence error: {0}")]
    Sequence(String),

    /// A contrastive batch could not be paired.
    #[error("pairing error: {0}")]
    Pairing(String),

    /// No qualifying positive pairs exist in the data.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Training diverged.
    #[error("training error at step {step}: {message}")]
    Training { step: usize, message: String },

    /// A non-finite value appeared in a numeric computation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The normal equations stayed singular after damping escalation.
    #[error("solver error: {0}")]
    Solver(String),

    /// An argument was empty or otherwise unusable.
    #[error("argument error: {0}")]
    Argument(String),

    /// A persisted file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
