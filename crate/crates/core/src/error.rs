use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite matrix entry at t = {t}")]
    NonFiniteMatrix { t: f64 },

    #[error("counterdiabatic coupling pole at t = {t} (|Δ'² + 4g²| = {magnitude:e})")]
    Pole { t: f64, magnitude: f64 },

    #[error("mixing angle undefined at t = {t} (g_m = 0 and Δ = 0)")]
    UndefinedAngle { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("too many integration steps before t = {t}")]
    TooManySteps { t: f64 },

    #[error("zero-norm state")]
    ZeroNorm,

    #[error("unknown {kind}: {name}")]
    NotFound { kind: &'static str, name: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error comes from the numerics (as opposed to bad input or I/O).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteMatrix { .. }
                | Error::Pole { .. }
                | Error::UndefinedAngle { .. }
                | Error::StepUnderflow { .. }
                | Error::NonFiniteState { .. }
                | Error::TooManySteps { .. }
                | Error::ZeroNorm
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
