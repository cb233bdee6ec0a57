use thiserror::Error;

/// Errors raised by the ZDD, dynamic-programming, bandit and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid ZDD: {0}")]
    InvalidZdd(String),

    #[error("the decision set is empty")]
    EmptyFamily,

    #[error("the decision set has zero total weight")]
    ZeroWeight,

    #[error("family has {count} members, more than the limit of {limit}")]
    TooManyMembers { count: String, limit: usize },

    #[error("arm {arm} is outside 1..={arms}")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix has no eigenvalue above the rank threshold")]
    ZeroMatrix,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node {0} is not in the graph")]
    UnknownNode(usize),

    #[error("oracle cap exceeded: {0}")]
    CapExceeded(String),

    #[error("degenerate decision set: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by malformed or invalid input rather than
    /// failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::InvalidZdd(_)
                | Error::InvalidGraph(_)
                | Error::UnknownNode(_)
                | Error::Config(_)
                | Error::ArmOutOfRange { .. }
                | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
