use thiserror::Error;

/// Failure kinds shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or inconsistent input.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A documented precondition does not hold; `witness` names the offending data.
    #[error("contract violation: {message} (witness: {witness})")]
    ContractViolation { message: String, witness: String },
    /// A materialization or iteration bound was exceeded.
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    /// An internal invariant failed.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn contract(msg: impl Into<String>, witness: impl Into<String>) -> Self {
        Error::ContractViolation {
            message: msg.into(),
            witness: witness.into(),
        }
    }

    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::ContractViolation { .. } => "contract-violation",
            Error::ResourceLimit(_) => "resource-limit",
            Error::Internal(_) => "internal-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
