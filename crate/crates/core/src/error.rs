use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("iterate became non-finite at iteration {iteration} ({what})")]
    Divergence { iteration: usize, what: &'static str },

    #[error("inner solver did not converge after {iterations} iterations (residual {residual:e})")]
    InnerSolver { iterations: usize, residual: f64 },

    #[error("metric unavailable: {0}")]
    UnsupportedMetric(String),

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("reference oracle failed: {reason} (values {values:?})")]
    OracleFailure { reason: String, values: Vec<f64> },

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}
