use thiserror::Error;

use crate::value::ValueKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while decoding a persisted shard.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected \"PDRL\"")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unexpected end of input at byte {0}")]
    Truncated(usize),
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("unknown checksum algorithm tag {0}")]
    UnknownChecksum(u8),
    #[error("malformed shard: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("column `{column}` expects {expected} but found {found}")]
    TypeMismatch {
        column: String,
        expected: ValueKind,
        found: ValueKind,
    },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("invalid query: {0}")]
    Invalid(String),

    #[error("unsupported query: {0}")]
    Unsupported(String),

    #[error("trie construction: {0}")]
    Trie(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("codec {codec}: {message}")]
    Codec { codec: u8, message: String },

    #[error("shard {shard}: {message}")]
    Distributed { shard: u32, message: String },

    #[error("internal: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn syntax(position: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            position,
            message: message.into(),
        }
    }

    /// Character offset of a syntax error, if this is one.
    pub fn position(&self) -> Option<usize> {
        match self {
            Error::Syntax { position, .. } => Some(*position),
            _ => None,
        }
    }

    /// True for errors caused by the query text or the data, false for bugs
    /// and environment failures.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Internal(_) | Error::Io(_))
    }
}
