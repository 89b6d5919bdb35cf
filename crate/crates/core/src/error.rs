use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (dimension mismatch,
    /// stepping a finished episode, NaN fitness, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown environment `{0}`")]
    UnknownEnv(String),

    #[error("checkpoint format version mismatch: file has v{found}, this build reads v{expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),

    #[error("output directory {path} is not writable")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
