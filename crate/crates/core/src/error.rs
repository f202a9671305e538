use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Iteration did not converge or produced non-finite values. `residual`
    /// carries the best available measure of how far off the result is.
    #[error("numerical failure: {message} (residual {residual:e})")]
    NumericalFailure { message: String, residual: f64 },

    /// Power iteration stopped at its iteration cap; `estimate` is the last
    /// iterate and is usually still a good lower bound.
    #[error("power iteration did not converge after {iterations} steps (estimate {estimate})")]
    NotConverged { estimate: f64, iterations: usize },

    /// `column` is 1-based.
    #[error("matrix is numerically rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Shape {
            expected: expected.into(),
            got: got.into(),
        }
    }

    /// True for errors caused by bad user input rather than arithmetic.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension(_)
                | Error::Shape { .. }
                | Error::Precondition(_)
                | Error::DegenerateInput(_)
                | Error::Parse { .. }
                | Error::UnsupportedFormat(_)
                | Error::Io(_)
        )
    }
}
