use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("gossip matrix violates network assumptions: {0}")]
    GossipMatrix(String),

    #[error("spectrum has no strictly positive eigenvalue")]
    NoPositiveEigenvalue,

    #[error("invalid problem instance: {0}")]
    Instance(String),

    #[error("point is not in the simplex: {0}")]
    NotInSimplex(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("dual point violates the constraint ||s||_q <= 1 (norm {0})")]
    DualInfeasible(f64),

    #[error("invalid prox parameters: {0}")]
    Prox(String),

    #[error("bisection did not converge within {0} iterations")]
    BisectionCap(usize),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
