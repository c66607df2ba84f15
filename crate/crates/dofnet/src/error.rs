use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input text could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// A node name or index was not found in the network.
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    /// The network violates a structural requirement.
    #[error("malformed network: {0}")]
    Malformed(String),
    /// An operation was called with arguments outside its contract.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An exhaustive search refused to run because the instance is too large.
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    /// The classifier hit its search caps without reaching a verdict.
    #[error("classification indeterminate: {0}")]
    Indeterminate(String),
    /// A condition that is guaranteed under the stated preconditions failed;
    /// this signals a bug or a precondition breach, never normal control flow.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    /// A synthesized scheme failed verification against the network.
    #[error("scheme verification failed: {0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Shorthand constructor for [`Error::Invariant`].
    pub fn invariant(msg: impl Into<String>) -> Error {
        Error::Invariant(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
