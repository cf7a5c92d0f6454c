use thiserror::Error;

/// Errors raised by the numerical kernels and experiment runners.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {t} outside the profile domain [0, {cap})")]
    DomainExceeded { t: f64, cap: f64 },
    #[error("warping function violates the pole condition f(r) ~ r")]
    PoleViolation,
    #[error("radius {r} outside the range where the curvature regime applies")]
    OutOfRegimeRange { r: f64 },
    #[error("monotonicity side condition fails (value {value})")]
    Inadmissible { value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operation requires a form of positive degree")]
    DegreeZero,
    #[error("variation is not compactly supported inside the grid")]
    SupportViolation,
    #[error("vanishing exponent is not admissible: {0}")]
    InadmissibleExponent(String),
    #[error("conservation pre-check failed: residual {residual:e} above {threshold:e}")]
    ConservationPrecheckFailed { residual: f64, threshold: f64 },
    #[error("radial curvature {k} at r = {r} lies outside the regime band")]
    RegimeMismatch { r: f64, k: f64 },
    #[error("sample span too short: need at least three decades")]
    SpanTooShort,
    #[error("radius {a} is inside the slope singularity at {r_sing}")]
    SingularRadius { a: f64, r_sing: f64 },
    #[error("support of the field is not a simply connected rectangle")]
    NotSimplyConnectedSupport,
    #[error("field is not a solution: residual {residual:e} above {tol:e}")]
    NotASolution { residual: f64, tol: f64 },
    #[error("degree out of range: {0}")]
    DegreeOutOfRange(String),
    #[error("grid does not cover the requested spheres")]
    GridTooSmall,
    #[error("field is not spacelike: |d sigma|^2 = {value} >= 1")]
    NotSpacelike { value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that come from leaving the numerical domain of a
    /// profile or a solution (as opposed to malformed input).
    pub fn is_numerical_domain(&self) -> bool {
        matches!(
            self,
            Error::DomainExceeded { .. }
                | Error::PoleViolation
                | Error::OutOfRegimeRange { .. }
                | Error::SingularRadius { .. }
                | Error::NotSpacelike { .. }
                | Error::GridTooSmall
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
