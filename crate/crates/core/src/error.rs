use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("invalid network specification: {0}")]
    InvalidSpec(String),

    #[error("enumeration cap exceeded: {what} needs {needed} states (cap {cap})")]
    EnumerationCap {
        what: String,
        needed: u128,
        cap: u128,
    },

    #[error("typical set is empty for n = {n}, delta = {delta}")]
    EmptyTypicalSet { n: usize, delta: f64 },

    #[error("aux chain violates its distortion budget at position {k}: E d(U) = {expected} > {budget}")]
    ChainBudget { k: usize, expected: f64, budget: f64 },

    #[error("solver failed for {context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_context(self, context: impl Into<String>) -> Self {
        Error::Solver {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
