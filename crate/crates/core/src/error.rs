use std::path::PathBuf;

use nalgebra::Complex;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (bad shape, out-of-range parameter, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("pole: z = {0} coincides with an atom on the real axis")]
    Pole(Complex<f64>),

    #[error("singular {what} (condition estimate {condition:.3e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("solver did not converge after {iterations} iterations (last m = {last}, residual {residual:.3e})")]
    NoConvergence {
        last: Complex<f64>,
        residual: f64,
        iterations: usize,
    },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("density grid does not cover [{a}, {b}]: nonzero density at grid boundary")]
    Coverage { a: f64, b: f64 },

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("experiment: {0}")]
    Experiment(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics themselves, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NoConvergence { .. }
                | Error::Eigen(_)
                | Error::Pole(_)
                | Error::Fit(_)
                | Error::Experiment(_)
        )
    }
}
