use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("beta = {beta} outside the supported range [{min}, {max}]")]
    BetaOutOfRange { beta: f64, min: f64, max: f64 },

    /// A closed-form expression left its real domain (e.g. a nonpositive
    /// logarithm argument).
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
