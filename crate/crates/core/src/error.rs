use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integer overflow computing {0}")]
    Overflow(&'static str),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("matrix is singular or indefinite at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("weight is not admissible: {0}")]
    Inadmissible(String),

    #[error("instance too large for brute-force oracle: {0}")]
    TooLarge(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::Invalid(_)
                | Error::Inadmissible(_)
                | Error::TooLarge(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
