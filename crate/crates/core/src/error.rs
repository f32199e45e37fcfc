use thiserror::Error;

use crate::stationary::EigenData;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The Jacobian at the far-field state is (numerically) singular. The
    /// eigen-data is still attached so callers can inspect the zero mode.
    #[error("singular Jacobian at far field (det = {det:e})")]
    SingularJacobian { det: f64, eigen: Box<EigenData> },

    #[error("no stationary profile: {reason} (x = {x})")]
    NoProfile { reason: String, x: f64 },

    #[error("grid too coarse: resampling error {error:e} exceeds {tol:e}")]
    GridTooCoarse { error: f64, tol: f64 },

    #[error("insufficient tail: {0}")]
    InsufficientTail(String),

    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("missing boundary history: {0}")]
    MissingHistory(String),

    #[error("outside Lagrangian chart: {0}")]
    OutOfChart(String),

    #[error("need {needed} snapshots around index {index}, trajectory has {available}")]
    InsufficientSnapshots {
        needed: usize,
        index: usize,
        available: usize,
    },

    #[error("breakdown at t = {time}: {source}")]
    Breakdown {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
