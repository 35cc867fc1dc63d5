use thiserror::Error;

/// Errors raised by the library.
///
/// Variants group failures by the stage that can act on them: configuration
/// problems, numerical breakdowns and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("index {index} out of range for {what}")]
    OutOfRange { what: &'static str, index: i64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("state is not physical: minimum symplectic eigenvalue {nu_min:e} < 1/2")]
    NotPhysical { nu_min: f64 },

    #[error("ill-conditioned x-block (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by bad user input rather than numerics or I/O.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_)
                | Error::OutOfRange { .. }
                | Error::Dimension { .. }
                | Error::UnsupportedFormat(_)
                | Error::Parse(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Json(_))
    }
}
