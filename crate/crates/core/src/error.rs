use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// 1/|r₁ − r₂| evaluated at electron coalescence.
    #[error("coalescence singularity at r1 = r2 = {r}, cos(theta) = 1")]
    Singularity { r: f64 },

    /// Inconsistent basis, knot or model configuration.
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("index {index} out of range for {len} B-splines")]
    IndexOutOfRange { index: usize, len: usize },

    /// Cholesky factorization of the overlap matrix failed.
    #[error("overlap matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigensolver failure: {0}")]
    Solver(String),

    /// The screening constant requires 2Z + χ > 0.
    #[error("model domain error: {0}")]
    ModelDomain(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Configuration(msg.into())
}
