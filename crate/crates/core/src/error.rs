use thiserror::Error;

/// Errors produced by the fracsym library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("reflection level {level} on axis {axis} does not map the lattice onto itself")]
    OffLattice { axis: usize, level: f64 },

    #[error("condition (D) violated: {0}")]
    ConditionD(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("kernel evaluated at coincident points")]
    Coincident,

    #[error("field is not antisymmetric about axis {axis} (relative defect {defect:e})")]
    NotAntisymmetric { axis: usize, defect: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("exponent p = {p} is not subcritical (requires 1 < p < {critical})")]
    Supercritical { p: f64, critical: f64 },

    #[error("iterate collapsed to the zero field")]
    Collapse,

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
