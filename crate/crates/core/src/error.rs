use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("size mismatch: expected {expected}x{expected}, got {actual}x{actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("input too small: {0}")]
    TooSmall(String),

    #[error("grid of {pixels} pixels exceeds the memory budget of {budget_bytes} bytes")]
    Resource { pixels: usize, budget_bytes: usize },

    #[error("position ({x:.3}, {y:.3}) m is outside the heightfield")]
    OutOfBounds { x: f64, y: f64 },

    #[error("no valid mission after {attempts} attempts")]
    NoValidMission { attempts: u32 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("png: {0}")]
    Png(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by absent input artifacts (exit code 2 in the CLI).
    pub fn is_missing_input(&self) -> bool {
        match self {
            Error::MissingInput(_) => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            _ => false,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
