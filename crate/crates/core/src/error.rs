use std::path::PathBuf;

use thiserror::Error;

/// Coarse failure classes, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Unreadable, malformed or inconsistent input data.
    Input,
    /// A numerical procedure could not produce a result.
    Numerical,
    /// Parameters outside the accepted range.
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh too coarse: k_s*a = {ka:.4} reaches the first zero of J1 at {freq_hz:.6e} Hz")]
    MeshTooCoarse { ka: f64, freq_hz: f64 },

    #[error("no knee in singular value spectrum; supply an explicit truncation index")]
    NoKnee,

    #[error("exponential fit failed: {0}")]
    Fit(String),

    #[error("model construction failed: {0}")]
    Model(String),

    #[error("saturation: FSV {fsv} is outside the attainable range of every model draw")]
    Saturation { fsv: f64 },

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("region of interest: {0}")]
    Region(String),

    #[error("SVD failed to converge")]
    Svd,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Format { .. }
            | Error::Dimension(_)
            | Error::Index(_)
            | Error::Io { .. }
            | Error::Json { .. } => ErrorCategory::Input,
            Error::Domain(_)
            | Error::NoKnee
            | Error::Fit(_)
            | Error::Model(_)
            | Error::Saturation { .. }
            | Error::Estimation(_)
            | Error::Svd => ErrorCategory::Numerical,
            Error::Parameter(_)
            | Error::Geometry(_)
            | Error::MeshTooCoarse { .. }
            | Error::Region(_) => ErrorCategory::Config,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
