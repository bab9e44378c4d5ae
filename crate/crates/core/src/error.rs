//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("jet order {requested} unavailable (at most {available} can be reconstructed)")]
    OrderUnavailable { requested: usize, available: usize },

    #[error("time {t} outside [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("jet order {have} insufficient: {need} required")]
    InsufficientJetOrder { have: usize, need: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("initial data violates the admissibility constraint: {0}")]
    ConstraintViolation(String),

    #[error("boundary matrix is singular (T = {horizon})")]
    SingularBoundaryMatrix { horizon: f64 },

    #[error("Lagrangian is not affine and solvable in the adjoint block: {0}")]
    NonSolvableForm(String),

    #[error("adjoint vanishes on an interval near t = {t}")]
    DegenerateAdjoint { t: f64 },

    #[error("degenerate horizon T = {horizon}: |sin T| = {sin_t:e} is below threshold")]
    DegenerateHorizon { horizon: f64, sin_t: f64 },

    #[error("invalid parameters: {0}")]
    BadParams(String),

    #[error("no closed-form optimum for {0}")]
    NoClosedForm(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// `true` for failures that stem from numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::SingularBoundaryMatrix { .. }
                | Error::DegenerateAdjoint { .. }
                | Error::NonSolvableForm(_)
        )
    }
}
