use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid site space: {0}")]
    InvalidSites(String),

    #[error("state budget exceeded: {product} states requested, budget is {budget}")]
    BudgetExceeded { product: String, budget: usize },

    #[error("configuration {0:?} is not on the lattice")]
    NotOnLattice(Vec<usize>),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
