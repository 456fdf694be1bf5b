use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("state outside the domain of {system}: {detail}")]
    Domain { system: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not enough data: got {got}, need {need} ({what})")]
    InsufficientData {
        what: &'static str,
        got: usize,
        need: usize,
    },

    #[error("too few exceedances: got {got}, need at least {need}")]
    TooFewExceedances { got: usize, need: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no sign change of the dimension equation on ({lo}, {hi}] for q = {q}")]
    NoBracket { q: f64, lo: f64, hi: f64 },

    #[error("visit horizon {horizon} exceeds orbit length {orbit}")]
    HorizonTooLong { horizon: usize, orbit: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
