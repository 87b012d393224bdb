use thiserror::Error;

/// Error type shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` out of range: {message}")]
    Parameter { name: &'static str, message: String },

    #[error("covariance matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NonSymmetric { max_asym: f64 },

    #[error("unphysical covariance matrix: symplectic eigenvalue {nu:.6e} < 1/2")]
    Unphysical { nu: f64 },

    #[error("non-finite entry in mean or covariance")]
    NonFinite,

    #[error("mode index {index} out of range for {nmodes}-mode state")]
    ModeIndex { index: usize, nmodes: usize },

    #[error("cutoff {cutoff} too small: truncation tail {tail:.3e} exceeds bound {bound:.3e}")]
    CutoffTooSmall { cutoff: usize, tail: f64, bound: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty typical set: delta={delta} admits no type at n={n}")]
    EmptyTypicalSet { n: usize, delta: f64 },

    #[error("type enumeration infeasible: n={n} exceeds limit {limit}")]
    EnumerationInfeasible { n: usize, limit: usize },

    #[error("net rate is not positive: chi={chi} <= k={k}")]
    NonPositiveRate { chi: f64, k: f64 },

    #[error("scheduler infeasible: {0}")]
    SchedulerInfeasible(String),

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),

    #[error("{0}")]
    Invalid(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param_err(name: &'static str, message: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        message: message.into(),
    }
}
