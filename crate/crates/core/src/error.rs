use alloc::string::String;

/// Errors produced by the engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violated an operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A correlator matrix does not satisfy the orthogonality precondition.
    #[error("precondition violated: {what} (deviation {deviation:.3e} exceeds tolerance {tolerance:.1e})")]
    Precondition {
        /// Which condition failed.
        what: &'static str,
        /// Observed deviation.
        deviation: f64,
        /// Allowed deviation.
        tolerance: f64,
    },
    /// Count data carries no information (non-positive total).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// Conflicting experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

/// Result alias for engine operations.
pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
