use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),

    #[error("coefficient field is not positive on triangle {triangle}")]
    NonPositiveCoefficient { triangle: usize },

    #[error("state matrix is numerically singular for epsilon = {epsilon} (pivot {pivot:e} at row {row})")]
    SingularState { epsilon: f64, row: usize, pivot: f64 },

    #[error("control grid incompatible with mesh: {0}")]
    IncompatibleGrids(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// 1-based index of the basis function whose projector norm vanished.
    #[error("basis function {0} lies numerically in the nullspace (projector norm {1:e})")]
    DegenerateBasis(usize, f64),

    #[error("regularized system is ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("discrepancy target {gamma:e} is below the smallest attainable residual {min_residual:e}")]
    GammaTooSmall { gamma: f64, min_residual: f64 },

    #[error("discrepancy target {gamma:e} cannot be bracketed (largest residual {max_residual:e})")]
    GammaTooLarge { gamma: f64, max_residual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
