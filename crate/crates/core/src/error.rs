use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its domain (caught at construction).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An argument lies outside the state space / support.
    #[error("outside support: {0}")]
    OutOfSupport(String),
    /// A caller broke a shape or length contract.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The operation is not defined for this family.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Quadrature, root finding or a sampler failed numerically.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Input data is malformed.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
