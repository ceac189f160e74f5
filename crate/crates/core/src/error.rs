use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants follow the failure classes of the numerical pipeline: bad
/// input, out-of-domain arguments, solver failures and admissibility.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("convergence error: {what} (best lower bound {best})")]
    Convergence { what: String, best: f64 },
    #[error("search error: {0}")]
    Search(String),
    #[error("integration error: {0}")]
    Integration(String),
    #[error("precision error: {what} (achieved estimate {estimate}, error {error})")]
    Precision {
        what: String,
        estimate: f64,
        error: f64,
    },
    #[error("divergence error: {0}")]
    Divergence(String),
    #[error("efficiency error: {0}")]
    Efficiency(String),
    #[error("admissibility error: {0}")]
    Admissibility(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
