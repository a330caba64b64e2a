use std::path::PathBuf;

use thiserror::Error;

use crate::dispersive::Pole;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("{field}: duplicate qubit id {id:?}")]
    DuplicateQubit { field: String, id: String },

    #[error("{field}: coupling references undeclared qubit {label:?}")]
    DanglingCoupling { field: String, label: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("perturbation theory diverges: {0}")]
    Divergent(Pole),

    #[error("dressed state {label} is hybridized (max overlap {overlap:.4})")]
    Hybridized { label: String, overlap: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("no root in search box: {0}")]
    NoRoot(String),

    #[error("time step {dt} ns exceeds resolution bound {bound} ns")]
    StepSize { dt: f64, bound: f64 },

    #[error("norm drifted by {0:.3e} during integration")]
    UnitarityDrift(f64),

    #[error("matrix is not unitary (|U†U − I| = {0:.3e})")]
    NotUnitary(f64),

    #[error("{count} spectators exceed the enumeration cap of {cap}")]
    TooManySpectators { count: usize, cap: usize },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("every sweep point sits on a pole")]
    AllDiverged,
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Validation,
    Numerical,
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) | Error::Io { .. } => ErrorKind::Usage,
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::DuplicateQubit { .. }
            | Error::DanglingCoupling { .. }
            | Error::TooManySpectators { .. } => ErrorKind::Validation,
            _ => ErrorKind::Numerical,
        }
    }
}
