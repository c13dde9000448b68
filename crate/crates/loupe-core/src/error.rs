//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the numeric routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("Möbius pole lies on the circle; the image is a line")]
    PoleOnCircle,
    #[error("walk exceeded the step limit of {0}")]
    StepLimitExceeded(u64),
    #[error("extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),
    #[error("boundary-density arc too coarse: bias {bias:.3e} exceeds stderr {stderr:.3e}")]
    ArcTooCoarse { bias: f64, stderr: f64 },
    #[error("quadrature did not converge: {0}")]
    QuadratureNonconvergent(String),
    #[error("renormalized tail is not decaying (slope {0:.3})")]
    TailNotDecaying(f64),
    #[error("kappa {0} outside (0, 4]")]
    KappaOutOfRange(f64),
    #[error("Loewner solver unstable: {0}")]
    SolverUnstable(String),
    #[error("hull touches the domain boundary")]
    HullTouchesBoundary,
    #[error("shell range insufficient: boundary shell contributes {0:.3e}")]
    ShellRangeInsufficient(f64),
    #[error("linear solve failed: {0}")]
    Linear(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors that signal a violated numeric contract rather than bad input.
    pub fn is_numeric_contract(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::DomainViolation(_) | Error::Unsupported(_) | Error::KappaOutOfRange(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
