//! Error types shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A model parameter violates one of its invariants. `name` identifies
    /// the offending field so that callers can report the exact bound.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// An input to a closure or conversion formula is outside its domain.
    #[error("domain error in {context}: {message}")]
    Domain {
        context: &'static str,
        message: String,
    },

    /// A state failed validation (grid too small, non-finite fields, ...).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The requested time step violates the CFL bound of the scheme.
    #[error("CFL violation: dt*|lambda|/dx = {ratio:.6} exceeds limit {limit}")]
    CflViolation { ratio: f64, limit: f64 },

    /// The solution left the space of finite numbers.
    #[error("non-finite state encountered at step {step} (t = {t})")]
    NonFiniteState { step: usize, t: f64 },

    /// Step-count guard tripped; the time step collapsed.
    #[error("step limit of {limit} exceeded before reaching t = {t_end}")]
    StepLimit { limit: usize, t_end: f64 },

    /// Two vehicles are closer than the minimal headway.
    #[error("collision: gap {gap:.6e} behind car {index} is not larger than H = {h:.6e}")]
    Collision { index: usize, gap: f64, h: f64 },

    /// The micro integrator could not find an admissible step.
    #[error("micro step failure: dt halved {halvings} times without an admissible step")]
    StepFailure { halvings: usize },

    /// Riemann data the oracle does not support.
    #[error("unsupported Riemann data: {0}")]
    UnsupportedRiemannData(String),

    #[error("unknown preset id `{0}` (expected ex1, ex2, ex3 or ex4)")]
    UnknownPreset(String),

    /// Config-file parse failure, with the 1-based line number.
    #[error("config parse error at {path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(context: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            context,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
