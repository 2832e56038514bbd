use std::path::Path;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad inputs: config, schemas, ranges, alignment. Exit code 1.
    Validation,
    /// A stage failed while computing or doing IO. Exit code 2.
    Stage,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("stage failure: {0}")]
    Stage(String),
    #[error("io on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn stage(msg: impl Into<String>) -> Self {
        Error::Stage(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Validation(_) => ErrorKind::Validation,
            Error::Stage(_) | Error::Io { .. } => ErrorKind::Stage,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
