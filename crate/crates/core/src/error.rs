use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("singularity: {0}")]
    SingularityError(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("singular step: diagonal factor {0} vanishes")]
    SingularStep(f64),
    #[error("CFL violation: dt = {dt} exceeds limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("non-finite field at step {step}")]
    NonFiniteField { step: usize },
    #[error("no convergence after {iterations} iterations (last contraction ratio {ratio})")]
    NoConvergence { iterations: usize, ratio: f64 },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("history truncated: {0}")]
    HistoryTruncated(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Validation errors are caller mistakes; everything else is a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ParameterViolation(_)
                | Error::DomainError(_)
                | Error::LengthMismatch { .. }
                | Error::SizeMismatch { .. }
                | Error::CflViolation { .. }
                | Error::DegenerateData(_)
                | Error::HistoryTruncated(_)
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
