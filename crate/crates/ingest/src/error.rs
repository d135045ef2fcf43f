use thiserror::Error;

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("line {line}: column `{column}` expects {expected} but got {value:?}")]
    Type {
        line: u64,
        column: String,
        expected: String,
        value: String,
    },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] pdrill_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True when the input data (not the program) is at fault.
    pub fn is_data_error(&self) -> bool {
        match self {
            IngestError::Csv { .. } | IngestError::Type { .. } | IngestError::Config(_) | IngestError::Io { .. } => {
                true
            }
            IngestError::Core(e) => e.is_user_error(),
        }
    }
}
