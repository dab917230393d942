use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Scene or parameter validation failure, qualified by a field path such as
    /// `lattice.thickness`.
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("input format error in {path}: {message}")]
    InputFormat { path: PathBuf, message: String },

    #[error("missing file `{path}` referenced by `{field}`")]
    MissingFile { field: String, path: PathBuf },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::Validation { .. } => "E_VALIDATION",
            Error::Syntax { .. } => "E_SYNTAX",
            Error::InputFormat { .. } => "E_INPUT_FORMAT",
            Error::MissingFile { .. } => "E_MISSING_FILE",
            Error::ResourceLimit(_) => "E_RESOURCE_LIMIT",
            Error::Io { .. } => "E_IO",
            Error::Stage { source, .. } => source.code(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::Validation { .. }
            | Error::Syntax { .. }
            | Error::InputFormat { .. }
            | Error::MissingFile { .. } => 2,
            Error::Io { .. } => 3,
            Error::ResourceLimit(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
