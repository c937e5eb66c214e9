//! Error types shared across the crate.

use thiserror::Error;

/// Broad failure class, used by front ends to choose exit codes: bad caller
/// input versus a numerical procedure that could not complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
}

#[derive(Debug, Error)]
pub enum PridError {
    #[error("{0}")]
    InvalidInput(String),

    #[error("{what} is not symmetric positive definite: {detail}")]
    NotPositiveDefinite { what: String, detail: String },

    #[error("model is not stationary: companion spectral radius {radius:.6} exceeds {limit}")]
    NonStationary { radius: f64, limit: f64 },

    #[error(
        "series too short: estimation at n_vars={n_vars}, order={order} needs more than \
         {required} samples (n_vars*order + 1), got {got}"
    )]
    SeriesTooShort {
        required: usize,
        n_vars: usize,
        order: usize,
        got: usize,
    },

    #[error("singular regressor Gram matrix: {detail}")]
    SingularGram { detail: String },

    #[error(
        "stationary covariance solve did not converge: residual {residual:.3e} exceeds \
         tolerance {tolerance:.3e}"
    )]
    LyapunovResidual { residual: f64, tolerance: f64 },

    #[error("restricted model for subset {subset} at q={q} is numerically singular{detail}")]
    SingularRestricted {
        subset: String,
        q: usize,
        detail: String,
    },

    #[error(
        "information measure {measure} = {value:.6e} nats is negative beyond tolerance; \
         the covariance inputs are mutually inconsistent"
    )]
    NegativeInformation { measure: String, value: f64 },

    #[error("internal consistency check failed: {detail}")]
    Inconsistent { detail: String },

    #[error(
        "lattice unsupported for n_sources={n}: the atom count grows double-exponentially, \
         cap is {cap}"
    )]
    LatticeTooLarge { n: usize, cap: usize },

    #[error("surrogate {index} failed analysis twice: {source}")]
    SurrogateFailed {
        index: usize,
        #[source]
        source: Box<PridError>,
    },
}

impl PridError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            PridError::InvalidInput(_)
            | PridError::SeriesTooShort { .. }
            | PridError::LatticeTooLarge { .. } => ErrorKind::Input,
            PridError::NotPositiveDefinite { .. }
            | PridError::NonStationary { .. }
            | PridError::SingularGram { .. }
            | PridError::LyapunovResidual { .. }
            | PridError::SingularRestricted { .. }
            | PridError::NegativeInformation { .. }
            | PridError::Inconsistent { .. } => ErrorKind::Numerical,
            PridError::SurrogateFailed { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = std::result::Result<T, PridError>;
