use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value is outside its documented domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Two inputs that must share a pixel lattice do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The requested state is not a valid Gaussian state.
    #[error("unphysical scene: {0}")]
    Physicality(String),

    /// A normalized quantity has no support (all-zero input).
    #[error("zero-norm input: {0}")]
    ZeroNorm(&'static str),

    /// A configuration file failed to parse or validate.
    #[error("config error in field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A file did not match its declared binary or text format.
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
