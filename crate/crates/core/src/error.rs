use std::path::PathBuf;

/// Errors raised by the simulation and estimation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("covariance factorization failed (H={h}, M={m})")]
    Factorization { h: f64, m: usize },
    #[error("conditional scale g[{step}] = {value:e} is below the underflow guard")]
    Guard { step: usize, value: f64 },
    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),
    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("kernel table cache {}: {reason}", path.display())]
    Cache { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid caller input rather than numerics.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Domain(_) | Error::Index(_) => true,
            Error::Replication { source, .. } => source.is_usage(),
            _ => false,
        }
    }

    pub(crate) fn in_replication(self, index: usize) -> Error {
        match self {
            e @ Error::Replication { .. } => e,
            e => Error::Replication { index, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
