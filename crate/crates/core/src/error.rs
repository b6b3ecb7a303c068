use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (size mismatch, non-state, non-PSD, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Roots of a kernel polynomial drifted too far from the unit circle.
    #[error("ill-conditioned decomposition: max |1 - |root|| = {max_deviation:.3e}")]
    Conditioning { max_deviation: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Construction is not defined for this input (e.g. vanishing density).
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
