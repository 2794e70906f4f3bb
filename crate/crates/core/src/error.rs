use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative of order {requested} requested but closure supports at most {supported}")]
    Capability { requested: usize, supported: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid chain: {0}")]
    Chain(String),

    #[error("singular assembly at r = {r}: {what}")]
    Singular { r: f64, what: String },

    #[error("potential has imaginary residue {residue:e} above tolerance {tolerance:e} at r = {r}")]
    NotReal { r: f64, residue: f64, tolerance: f64 },

    #[error("matching failed: {0}")]
    Matching(String),

    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
