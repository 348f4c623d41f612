use thiserror::Error;

/// Errors raised by the simulators, kernels and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The model produced an invalid quantity (non-finite or negative rate,
    /// fragment outside `(0, x)`, unbounded test function, ...).
    #[error("model error: {0}")]
    Model(String),
    /// The caller passed arguments outside the operation's contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// The requested closed form or capability is not available for this object.
    #[error("capability error: {0}")]
    Capability(String),
    /// An argument lies outside the mathematical domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or quantity diverges.
    #[error("divergent: {0}")]
    Divergent(String),
    /// Fixed-step integration produced a negative density.
    #[error("step-size error: {0}")]
    StepSize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn model(msg: impl Into<String>) -> Error {
    Error::Model(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
