use thiserror::Error;

/// Errors produced by the certificate library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what}: {count} items exceed the enumeration cap of {cap}")]
    CapExceeded {
        what: &'static str,
        count: String,
        cap: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Reported with the 1-based vertex label used in all external formats.
    #[error("vertex {vertex} is outside 1..={m}")]
    VertexOutOfRange { vertex: usize, m: usize },

    #[error("hypergraph is not regular")]
    NotRegular,

    #[error("ill-conditioned geometry: {0}")]
    IllConditioned(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("eps = {eps:e} is not below the certified threshold {threshold:e}")]
    AboveThreshold { eps: f64, threshold: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by unreadable, malformed or mutually
    /// inconsistent input rather than by the mathematics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::DimensionMismatch(_)
                | Error::VertexOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
