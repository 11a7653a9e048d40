use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Hurst index must lie in (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "covariance is not positive semidefinite (pivot {pivot} = {value:e} after {escalations} jitter escalations)"
    )]
    NotPositiveSemidefinite { pivot: usize, value: f64, escalations: usize },

    #[error("budget exceeded: {what} = {requested} > {limit}")]
    Budget { what: &'static str, requested: usize, limit: usize },

    #[error("kernel {kernel} cannot be evaluated on a {dim}-dimensional grid")]
    DimensionMismatch { kernel: String, dim: usize },

    #[error("insufficient survivors: {usable} usable ladder points, need at least {needed}")]
    InsufficientSurvivors { usable: usize, needed: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
