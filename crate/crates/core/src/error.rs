use thiserror::Error;

use crate::Vec2;

/// Errors raised across the field, control, and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("target ({:.3}, {:.3}) lies inside an obstacle", .0.x, .0.y)]
    TargetInsideObstacle(Vec2),

    #[error("start ({:.3}, {:.3}) lies inside an obstacle", .0.x, .0.y)]
    StartInsideObstacle(Vec2),

    #[error("rasterized workspace has no free cell next to the target")]
    EmptyFreeSpace,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("harmonic solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("position ({:.4}, {:.4}) is outside free space", .0.x, .0.y)]
    OutOfFreeSpace(Vec2),

    #[error("gradient vanishes at ({:.4}, {:.4}); guidance direction undefined", .0.x, .0.y)]
    SingularGradient(Vec2),

    #[error("kinematic path stalled at a critical point near ({:.4}, {:.4})", .0.x, .0.y)]
    StalledAtCriticalPoint(Vec2),

    #[error("kinematic path did not reach the target within {0} steps")]
    MaxStepsExceeded(usize),

    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),

    #[error("gain matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("hessian has a negative eigenvalue ({0:e})")]
    NegativeEigenvalue(f64),

    #[error("trajectory never settled inside the target zone")]
    NeverSettled,

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::NonFiniteState(_)
                | Error::SingularGradient(_)
                | Error::StalledAtCriticalPoint(_)
                | Error::MaxStepsExceeded(_)
                | Error::NotPositiveDefinite
                | Error::NegativeEigenvalue(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
