use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {value:e}, error {error:e} after {evals} evaluations")]
    Quadrature { value: f64, error: f64, evals: usize },

    #[error("mass left the bounding box ({escaped:e} escaped, tolerance {tol:e}); enlarge the box")]
    BoxOverflow { escaped: f64, tol: f64 },

    #[error("search range exhausted: {0}")]
    Range(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
