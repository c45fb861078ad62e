use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("right-hand side must be nonzero")]
    ZeroRhs,

    #[error("zero-curvature direction encountered at iteration {iteration}")]
    ZeroCurvature {
        iteration: usize,
        direction: Vec<f64>,
    },

    #[error("solver already terminated")]
    Finished,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("matrix is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("oracle disagreement: {0}")]
    OracleDisagreement(String),

    #[error("trace was recorded without vectors")]
    MissingVectors,

    #[error("matrix market line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
