use thiserror::Error;

/// Errors raised across the library.
///
/// Every variant maps onto one of three coarse [`ErrorKind`]s, which the
/// command-line front end turns into exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid letter {0}: letters must lie in 1..=255")]
    InvalidLetter(u32),

    #[error("invalid alphabet {{{lo},{hi}}}: need 1 <= lo < hi <= 255")]
    InvalidAlphabet { lo: u32, hi: u32 },

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("{0}")]
    Domain(String),

    #[error("{what}: n = {n} is below the validity threshold {min}")]
    OutOfRange {
        what: &'static str,
        n: u64,
        min: u64,
    },

    #[error("resource limit: {0}")]
    ResourceLimit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input text.
    Usage,
    /// Input is well formed but outside the mathematical domain.
    Domain,
    /// Request exceeds a configured size or memory budget.
    ResourceLimit,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax { .. } => ErrorKind::Usage,
            Error::InvalidLetter(_)
            | Error::InvalidAlphabet { .. }
            | Error::Domain(_)
            | Error::OutOfRange { .. } => ErrorKind::Domain,
            Error::ResourceLimit(_) => ErrorKind::ResourceLimit,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
