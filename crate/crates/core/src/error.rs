use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants map one-to-one onto the harness exit codes, see
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unstable queue: utilization {rho:.4} >= 1")]
    Unstable { rho: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format(_) => 2,
            Error::Unstable { .. } => 3,
            Error::InsufficientData(_) => 4,
            Error::Parameter(_) | Error::Undefined(_) | Error::Io(_) => 1,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
