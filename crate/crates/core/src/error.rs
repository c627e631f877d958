use thiserror::Error;

/// Errors raised by lattice, density and enumeration routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid period point: {0}")]
    InvalidPoint(String),
    #[error("p-adic precision {precision} insufficient: {detail}")]
    Precision { precision: u32, detail: String },
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("budget exceeded: estimated {estimate:.3e} work units, budget {budget:.3e}")]
    Budget { estimate: f64, budget: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerically non-generic point: |Q(lambda_x)| = {value:.3e} below threshold {threshold:.3e}")]
    NonGeneric { value: f64, threshold: f64 },
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
    #[error("genericity violation: {0}")]
    Genericity(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
