use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("interval {lo}:{hi} out of range for a grid of {points} points")]
    IndexOutOfRange { lo: usize, hi: usize, points: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("path has no steps")]
    DegeneratePath,

    #[error("invalid exponent {0}")]
    InvalidExponent(f64),

    #[error("interval function returned a negative or non-finite value {value} on {lo}:{hi}")]
    NegativeIntervalValue { lo: usize, hi: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rectangle of {rows}x{cols} points exceeds the exact-mode limit {limit}")]
    RectangleTooLarge { rows: usize, cols: usize, limit: usize },

    #[error("cholesky factorization failed: {0}")]
    Cholesky(String),

    #[error("invalid generator matrix: {0}")]
    InvalidGenerator(String),

    #[error("solution blew up at grid index {index} (last finite index {last_valid})")]
    BlowUp { index: usize, last_valid: usize },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("all samples equal")]
    AllSamplesEqual,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("moments do not decay: {0}")]
    NonDecaying(String),

    #[error("config hash mismatch: stored {stored}, computed {computed}")]
    HashMismatch { stored: String, computed: String },

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error("unknown vector field family `{0}`")]
    UnknownField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
