use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped by the exit-code family the CLI maps them to:
/// parse failures, domain violations and numerical breakdowns.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("division by the zero element of R_q")]
    Division,

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error: {what} (best estimate {estimate:e}, residual {residual:e})")]
    Numerical {
        what: String,
        estimate: f64,
        residual: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(what: impl Into<String>, estimate: f64, residual: f64) -> Self {
        Error::Numerical {
            what: what.into(),
            estimate,
            residual,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
