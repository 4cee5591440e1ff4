use thiserror::Error;

/// Errors raised by the library. The CLI maps them to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or grids that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),
    /// Inputs that violate a precondition (non-finite samples, off-grid shifts, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// Parameters outside the range where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A computation that would exceed the memory budget.
    #[error("resource error: {0}")]
    Resource(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code: 2 for rejected input, 3 for resource limits, 1 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Structural(_) | Error::Validation(_) | Error::Domain(_) | Error::Parse(_) => 2,
            Error::Resource(_) => 3,
            Error::Io(_) => 1,
            Error::Csv(e) if e.is_io_error() => 1,
            Error::Csv(_) => 2,
        }
    }
}
