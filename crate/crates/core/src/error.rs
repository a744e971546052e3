use thiserror::Error;

/// Errors produced anywhere in the modelling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine (integrator, quadrature, linear algebra) failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An estimator could not produce an acceptable fit. `best` carries the
    /// best parameter vector seen, when there is one.
    #[error("estimation failed: {message}")]
    Estimation {
        message: String,
        best: Option<Vec<f64>>,
    },

    /// A malformed input row.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    /// A named stage of a multi-step pipeline failed.
    #[error("{stage} stage failed")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation {
            message: msg.into(),
            best: None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
