use thiserror::Error;

/// Errors shared by every construction in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A construction or dense evaluation would exceed the configured budget.
    #[error("budget exceeded while {what}: needs {needed}, cap is {cap}")]
    Budget {
        what: String,
        needed: u128,
        cap: u128,
    },

    /// A scale/window pair violates the evenness required for exact dyadic
    /// coefficient magnitudes.
    #[error("parity violation: window exponent {window} on a scale-{scale} interval must differ by an even amount")]
    Parity { window: u32, scale: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A tuned construction exists but a post-hoc statement check failed.
    #[error("construction check failed: {statement}: {detail}")]
    ConstructionCheck { statement: String, detail: String },

    /// No dictionary element is close enough to the residual.
    #[error("insufficient dictionary: best achievable distance {best_distance} exceeds tolerance {tolerance}")]
    InsufficientDictionary {
        best_distance: f64,
        tolerance: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn budget(what: impl Into<String>, needed: u128, cap: u128) -> Self {
        Error::Budget {
            what: what.into(),
            needed,
            cap,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}
