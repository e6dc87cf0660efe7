use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (negative rate,
    /// non-conservative generator, nonpositive sojourn mean, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A transition intensity overflowed or became NaN. The likelihood maps
    /// this to a log-likelihood of negative infinity.
    #[error("parameter explosion: {0}")]
    ParameterExplosion(String),

    /// A kernel produced row sums too far from one to be repaired by clamping.
    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Dataset-level validation failure (damage reversals, duplicate rows, ...).
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("initialization: {0}")]
    Initialization(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
