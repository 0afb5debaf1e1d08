use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("seed {0} expanded to an all-zero generator state")]
    SeedingFailure(u64),

    #[error("neuron index {index} out of range for a network of {n} neurons")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("NaN input to {0}")]
    NotANumber(&'static str),

    #[error("spike train has fewer than two inter-spike intervals")]
    InsufficientSpikes,

    #[error("inter-spike intervals have zero variance")]
    DegenerateIsi,

    #[error("sample is degenerate: {0}")]
    DegenerateSample(String),

    #[error("statistic kind mismatch: table holds {table}, observation holds {obs}")]
    KindMismatch { table: String, obs: String },

    #[error("grid point p={p}: {reason}")]
    TablePointFailure { p: f64, reason: String },

    #[error("graph has no edges")]
    NoEdges,

    #[error("gave up after {0} attempts to draw a computable statistic pair")]
    RetriesExhausted(usize),

    #[error("sample covariance matrix is singular")]
    SingularCovariance,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// Process exit code: 2 configuration, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Parse(_) | Error::KindMismatch { .. } => 2,
            Error::Io(_) => 4,
            Error::Context { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
