use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    PrecisionLoss(String),

    #[error("operands carry different (p, N) contexts")]
    ContextMismatch,

    #[error("matrix is singular")]
    Singular,

    #[error("invalid datum: {0}")]
    DatumInvalid(String),

    #[error("construction failed: {0}")]
    ConstructionFailure(String),

    /// An enumeration would exceed the configured budget. `lower_bound`
    /// carries whatever partial answer was established before giving up.
    #[error("budget exceeded for {what}: needs {needed}, budget {budget}")]
    Budget {
        what: String,
        needed: u128,
        budget: u128,
        lower_bound: Option<i64>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, needed: u128, budget: u128) -> Self {
        Error::Budget {
            what: what.into(),
            needed,
            budget,
            lower_bound: None,
        }
    }
}
