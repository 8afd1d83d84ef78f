use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("value {value} outside range [{lo}, {hi}] of piece {piece}")]
    Range {
        value: f64,
        lo: f64,
        hi: f64,
        piece: usize,
    },

    #[error("atom has no density (x = {0})")]
    AtomHasNoDensity(f64),

    #[error("invalid construction: {0}")]
    Construction(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("nondifferentiable point v = {v}; nearest valid v = {nearest_valid}")]
    NonDifferentiable { v: f64, nearest_valid: f64 },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
