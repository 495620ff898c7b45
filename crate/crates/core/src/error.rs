use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A construction parameter is outside its supported range.
    Config(String),
    /// An operation was called with arguments that violate its contract
    /// (index out of range, mismatched lengths, non-finite angle, ...).
    Usage(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

macro_rules! ensure_len {
    ($what:expr, $got:expr, $want:expr) => {
        if $got != $want {
            return Err($crate::error::Error::usage(alloc::format!(
                "{}: expected length {}, got {}",
                $what,
                $want,
                $got
            )));
        }
    };
}
pub(crate) use ensure_len;
