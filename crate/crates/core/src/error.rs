use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),
    #[error("point lies outside the set (gauge {gauge:.6})")]
    OutsideSet { gauge: f64 },
    #[error("disturbance weight vector is not in the unit simplex")]
    NotInSimplex,
    #[error("vertex {vertex}: {reason}")]
    Vertex { vertex: usize, reason: String },
    #[error("quadratic program is infeasible")]
    QpInfeasible,
    #[error("optimization failed: {0}")]
    Solver(String),
    #[error("LICQ violated in sector {sector} for active set {active:?}")]
    Licq { sector: usize, active: Vec<usize> },
    #[error("unbounded expression in `{0}`: cannot derive a big-M constant")]
    Unbounded(String),
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize, last: Box<crate::relu::ReluNetwork> },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
