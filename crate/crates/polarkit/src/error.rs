//! Crate-wide error type.
//!
//! Variants map one-to-one onto the CLI exit-code contract: usage and
//! format problems exit 2, I/O problems exit 3, numerical-domain problems
//! exit 4.

/// Error type shared by every module in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file did not match its declared format (bad magic, malformed
    /// header, inconsistent payload size, unknown layout tag).
    #[error("format error: {0}")]
    Format(String),

    /// An underlying read or write failed, including truncated payloads.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The caller violated an operation's contract (geometry mismatch,
    /// out-of-range argument, non-finite sample).
    #[error("usage error: {0}")]
    Usage(String),

    /// The inputs are well-formed but numerically outside the operation's
    /// domain (total internal reflection, degenerate correspondence set,
    /// constant image in edge search).
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error class (0 is success, reserved).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format(_) | Error::Usage(_) => 2,
            Error::Io(_) => 3,
            Error::Domain(_) => 4,
        }
    }
}
