use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {}", join_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("argument out of supported range: {0}")]
    OutOfRange(String),

    #[error("dipoles are not fully aligned; bright/dark basis is undefined")]
    NotAligned,

    #[error("analytic steady state unavailable: {0}")]
    AnalyticUnavailable(String),

    #[error("operation requires {0}")]
    Unsupported(String),

    #[error("coupling spectrum evaluated at zero frequency")]
    ZeroFrequency,

    #[error("sideband frequency {frequency} is nonpositive for q={q}")]
    NonpositiveSideband { q: i32, frequency: f64 },

    #[error("no bath coupling at any retained sideband")]
    NoCoupling,

    #[error("invalid harmonic weights: {0}")]
    InvalidWeights(String),

    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    #[error("step size underflow at t={t} (h={h})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("trace drift {drift:e} at t={t} exceeds bound")]
    TraceDrift { t: f64, drift: f64 },

    #[error("steady state not converged by t={t}: residual {residual:e}")]
    NotConverged { t: f64, residual: f64 },

    #[error("heat-current routes disagree: flux {flux} vs entropy {entropy}")]
    CurrentMismatch { flux: f64, entropy: f64 },

    #[error("efficiency {eta} exceeds Carnot bound {carnot}")]
    CarnotViolation { eta: f64, carnot: f64 },

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error("{0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::ConfigParse(_)
                | Error::OutOfRange(_)
                | Error::NotAligned
                | Error::Unsupported(_)
                | Error::ZeroFrequency
                | Error::NonpositiveSideband { .. }
                | Error::NoCoupling
                | Error::InvalidWeights(_)
                | Error::InvalidState(_)
                | Error::UnknownAxis(_)
                | Error::AnalyticUnavailable(_)
        )
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
