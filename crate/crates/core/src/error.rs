use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("argument within pole-proximity epsilon of lattice point {nearest}")]
    PoleProximity { nearest: Complex64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("phase branch tracking lost near z = {z}; use a finer walk step")]
    BranchTracking { z: f64 },

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("split-step instability: amplitude blow-up at z = {z}")]
    Instability { z: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Short machine-readable tag, used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::PoleProximity { .. } => "pole-proximity",
            Error::NumericFailure(_) => "numeric-failure",
            Error::Singularity(_) => "singularity",
            Error::ConstraintViolation(_) => "constraint-violation",
            Error::BranchTracking { .. } => "branch-tracking",
            Error::Resolution(_) => "resolution",
            Error::Instability { .. } => "instability",
            Error::Internal(_) => "internal",
        }
    }
}
