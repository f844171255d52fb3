use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("function is singular on the support at eigenvalue {eigenvalue:.3e}")]
    SingularFunction { eigenvalue: f64 },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("intertwiner consistency residual {residual:.3e} exceeds {tolerance:.1e}")]
    Inconsistent { residual: f64, tolerance: f64 },

    #[error("quadrature did not converge: residual {residual:.3e} after {nodes_per_panel} nodes per panel")]
    QuadratureNotConverged {
        residual: f64,
        nodes_per_panel: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
