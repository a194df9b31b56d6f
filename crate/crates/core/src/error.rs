use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} = {value} is out of range (max {max})")]
    Range { what: &'static str, value: f64, max: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{samples} boundary samples cannot resolve degree {degree} (need at least {needed})")]
    Aliasing { samples: usize, degree: usize, needed: usize },

    #[error("inverse round trip failed at probe {probe}: error {error}")]
    InconsistentInverse { probe: usize, error: f64 },

    #[error("composition of nonlinear certificates has no derived constants; certify the composed map empirically")]
    EmpiricalOnly,

    #[error("partial derivative in the target directions is singular (after {} iterations)", residual_history.len().saturating_sub(1))]
    SingularBlock { residual_history: Vec<f64> },

    #[error("Newton iteration did not reach tolerance in {} iterations", residual_history.len().saturating_sub(1))]
    NonConvergence { residual_history: Vec<f64> },

    #[error("point is not a regular point (sigma_min = {sigma_min}, sigma_max = {sigma_max})")]
    NotRegular { sigma_min: f64, sigma_max: f64 },

    #[error("unsupported grading: {0}")]
    UnsupportedGrading(String),

    #[error("image of probe {probe} is off the submanifold (residual {residual})")]
    NotIntoSubmanifold { probe: usize, residual: f64 },

    #[error("point is not on the constraint fiber (residual {residual})")]
    OffManifold { residual: f64 },

    #[error("construction failed: {0}")]
    ConstructionFailure(String),

    #[error("map evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn range(what: &'static str, value: impl Into<f64>, max: impl Into<f64>) -> Self {
        Error::Range { what, value: value.into(), max: max.into() }
    }
}
