use crate::geometry::Vortex;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("{what} coincides with vortex {vortex}")]
    DegeneratePoint { what: &'static str, vortex: Vortex },
    #[error("segment passes through vortex {0}")]
    VortexOnSegment(Vortex),
    #[error("endpoint lies on cut L_{0}; side of the crossing is ambiguous")]
    AmbiguousCrossing(Vortex),
    #[error("time argument outside the admissible domain")]
    TimeDomain,
    #[error("log-ratio argument is not positive")]
    LogDomain,
    #[error("pole of the vertex or chain factor")]
    Pole,
    #[error("angle {angle} outside the validity strip |theta| < pi")]
    ValidityDomain { angle: f64 },
    #[error("path segment {segment} is not visible in the cover")]
    Visibility { segment: usize },
    #[error("quadrature did not converge (value {re}+{im}i, error estimate {err_est:e})")]
    NonConvergence { re: f64, im: f64, err_est: f64 },
    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("evaluation at a singular point of the Euler-operator function")]
    Singularity,
    #[error("finite-difference stencil touches a cut or a vortex")]
    StencilCrossesCut,
    #[error("series truncation bound {tail:e} exceeds the budget")]
    SeriesNonConvergence { tail: f64 },
    #[error("non-finite intermediate value")]
    NonFinite,
}

impl Error {
    /// True for the errors that signal numerical nonconvergence rather than
    /// bad input.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::SeriesNonConvergence { .. } | Error::DimensionCap { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
