use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {0}")]
    Range(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate process: {0}")]
    DegenerateProcess(String),

    #[error("batch of {requested} values exceeds the memory cap of {cap}; use the streaming sum sampler instead")]
    Capacity { requested: usize, cap: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("interval covariance is degenerate at length {len} (lambda_min = {lambda_min:e})")]
    Degeneracy { len: usize, lambda_min: f64 },

    #[error("sequence of length {n} is too short for blocks of size {m}")]
    InsufficientLength { n: usize, m: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("gradient undefined at a kink or tied argmax")]
    UndefinedPoint,

    #[error("incomplete audit, missing grid points: {0:?}")]
    IncompleteAudit(Vec<String>),

    #[error("insufficient data: {usable} usable points, need at least 3")]
    InsufficientData { usable: usize },

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numeric or
    /// degeneracy failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Validation(_)
            | Error::Parameter(_)
            | Error::Input(_)
            | Error::Shape(_)
            | Error::Range(_)
            | Error::IncompleteAudit(_)
            | Error::InsufficientLength { .. } => 2,
            Error::DegenerateProcess(_)
            | Error::DegenerateVariance(_)
            | Error::Degeneracy { .. }
            | Error::Numeric(_)
            | Error::UndefinedPoint
            | Error::InsufficientData { .. } => 3,
            Error::Capacity { .. } | Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
