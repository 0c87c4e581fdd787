use thiserror::Error;

use crate::substitution::Symbol;

#[derive(Debug, Error)]
pub enum Error {
    #[error("letter `{0}` has no inflation rule")]
    Closure(Symbol),

    #[error("symmetrization failed: {0}")]
    Symmetrization(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("cannot parse word `{0}`")]
    Parse(String),

    #[error("unknown rule preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid coupling parameters: {0}")]
    InvalidCouplings(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("canonical value {value} outside [-1, 1]")]
    NumericalValidity { value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("size limit exceeded: {0}")]
    TooLarge(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("sweep: {0}")]
    Sweep(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Closure(_) => "closure",
            Error::Symmetrization(_) => "symmetrization",
            Error::InvalidRule(_) => "invalid_rule",
            Error::Parse(_) => "parse",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::InvalidCouplings(_) => "invalid_couplings",
            Error::Positivity(_) => "positivity",
            Error::Dimension(_) => "dimension",
            Error::NumericalValidity { .. } => "numerical_validity",
            Error::NoConvergence { .. } => "no_convergence",
            Error::TooLarge(_) => "too_large",
            Error::Fit(_) => "fit",
            Error::Sweep(_) => "sweep",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
