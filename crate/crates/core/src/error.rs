use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("characteristic field not simple or eigenvalue gap too small: {0}")]
    NotSimple(String),
    #[error("genuine coupling fails or optimizer budget exhausted: {0}")]
    Kawashima(String),
    #[error("Hugoniot solve failed: residual {residual:e}")]
    Hugoniot { residual: f64 },
    #[error("profile solve failed: {0}")]
    Profile(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("state outside working neighborhood at node {node}: {detail}")]
    OutsideNeighborhood { node: usize, detail: String },
    #[error("linearized solve failed: residual {residual:e} exceeds {tolerance:e}")]
    LinearSolve { residual: f64, tolerance: f64 },
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("non-decaying input to smoothing operator (boundary/interior = {ratio:e})")]
    NonDecaying { ratio: f64 },
    #[error("derivative order {0} too large or grid too small")]
    DerivativeOrder(usize),
    #[error("weight overflow: delta*eps*<x> = {0}")]
    WeightOverflow(f64),
    #[error("time marching did not reach steady state: {0}")]
    March(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
