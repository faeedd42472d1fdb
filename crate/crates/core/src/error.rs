use thiserror::Error;

/// Errors raised by the numerical stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rational input detected after {} partial quotients", prefix.len())]
    RationalInput { prefix: Vec<u64> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("need {needed} trusted partial quotients, only {available} available")]
    NotEnoughQuotients { needed: usize, available: usize },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("map does not preserve the unit circle (deviation {deviation:.3e})")]
    NotCircleInvariant { deviation: f64 },

    #[error("circle lift is not monotone near x = {at}")]
    NonMonotone { at: f64 },

    #[error("bisection did not converge; bracket [{lo}, {hi}]")]
    NonConvergence { lo: f64, hi: f64 },

    #[error("newton iteration failed at depth {depth}: {reason}")]
    NewtonFailure { depth: usize, reason: String },

    #[error("orbit left the computational domain at step {step}")]
    OrbitEscape { step: usize },

    #[error("log branch ambiguity at z = {re}+{im}i")]
    BranchAmbiguity { re: f64, im: f64 },

    #[error("pair is not renormalizable: {0}")]
    NotRenormalizable(String),

    #[error("insufficient depth: {0}")]
    InsufficientDepth(String),

    #[error("too few samples: need {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
