use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The closed-form linear certificate has a nonpositive decay rate.
    #[error("certificate infeasible: mu = {mu} (must lie in (0, 1))")]
    CertificateInfeasible { mu: f64 },

    /// `mu > L * L1 * (l11 + l12 + l2)` fails, so no admissible trigger exists.
    #[error("tuning infeasible: mu = {mu} does not exceed Lipschitz product {product}")]
    TuningInfeasible { mu: f64, product: f64 },

    /// The linear feasibility inequality fails (`lhs < rhs`).
    #[error("linear plant infeasible: {lhs} < {rhs}")]
    LinearInfeasible { lhs: f64, rhs: f64 },

    #[error("parameter search for {stage} exhausted; last iterate {last}")]
    SearchFailed { stage: &'static str, last: f64 },

    #[error("state diverged after step {last_finite}")]
    Diverged { last_finite: usize },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
