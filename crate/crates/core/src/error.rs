//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation's contract (bad shape, bad range,
    /// empty input, mislabeled training data).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data violated an invariant (non-finite value, unknown
    /// condition code).
    #[error("invalid data: {0}")]
    Data(String),

    /// A file could not be read or written. Carries the offending path
    /// or sensor name.
    #[error("i/o error for {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but malformed. Row/position indices are
    /// 0-based where present.
    #[error("format error in {file}{}: {detail}", fmt_row(.row))]
    Format {
        file: String,
        row: Option<usize>,
        detail: String,
    },

    /// An iterative fit failed to converge or diverged.
    #[error("training error: {0}")]
    Training(String),

    /// A persisted model could not be decoded.
    #[error("serialization error: {0}")]
    Serialization(String),
}

fn fmt_row(row: &Option<usize>) -> String {
    match row {
        Some(r) => format!(", row {r}"),
        None => String::new(),
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn format(file: impl Into<String>, row: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Format {
            file: file.into(),
            row,
            detail: detail.into(),
        }
    }

    pub fn training(msg: impl Into<String>) -> Self {
        Error::Training(msg.into())
    }

    pub fn serialization(msg: impl Into<String>) -> Self {
        Error::Serialization(msg.into())
    }
}
