use thiserror::Error;

/// Errors raised by samplers, estimators and the variational solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix of size {size} is not positive definite after jitter {jitter:e} (max diagonal {max_diag:e})")]
    NotPositiveDefinite {
        size: usize,
        jitter: f64,
        max_diag: f64,
    },

    #[error("circulant embedding failed: most negative eigenvalue {min_eigenvalue:e} (max {max_eigenvalue:e})")]
    EmbeddingFailure {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("oracle failed: {0}")]
    Oracle(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad caller input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::Format(_))
    }
}
