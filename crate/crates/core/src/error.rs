use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown function name `{0}`")]
    UnknownName(String),

    #[error("arity {arity} exceeds the capacity limit of {max}")]
    Capacity { arity: usize, max: usize },

    #[error("search too large: {what}")]
    SearchTooLarge { what: String },

    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("conditioning event has zero probability")]
    ZeroProbability,

    #[error("squared coefficients sum to {sum}, not 1; source is not ±1-valued")]
    NotBoolean { sum: f64 },

    #[error("function is not symmetric: swapping coordinates {i} and {j} changes it")]
    NotSymmetric { i: usize, j: usize },

    #[error("stability does not depend on the correlation; no unique root")]
    ConstantStability,

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("rejection sampling gave up after {attempts} attempts: {reason}")]
    RetryCap { attempts: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
