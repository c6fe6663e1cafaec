use thiserror::Error;

/// Errors raised by the geometry helpers, the scalar solvers and the search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("instance is empty")]
    EmptyInstance,
    #[error("instance has {n} entries, above the oracle cap of {cap}")]
    OracleCap { n: usize, cap: usize },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("only {found} inliers survived, at least {needed} are required")]
    InsufficientInliers { found: usize, needed: usize },
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
