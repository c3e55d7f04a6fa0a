use thiserror::Error;

/// Errors produced across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor invariant was violated (e.g. `eta <= 1`).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Geometry degenerated (coincident points, anti-parallel rays).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Operand shapes do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A metric is undefined for the given inputs.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Configuration document failed schema or invariant validation.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Binary matrix file is malformed.
    #[error("matrix format error: {0}")]
    MatrixFormat(String),

    /// PGM image file is malformed.
    #[error("image format error: {0}")]
    ImageFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Unknown strategy name in the registry.
    #[error("unknown {kind} `{name}`; available: {available}")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

impl Error {
    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
