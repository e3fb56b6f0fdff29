use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid torus parameters: {0}")]
    InvalidTorus(String),

    #[error("grid size {grid} too small for truncation N={n_max} (need at least {required})")]
    GridTooSmall { grid: usize, n_max: usize, required: usize },

    #[error("field is not divergence-free (residual {residual:.3e} above {tolerance:.3e})")]
    NotDivergenceFree { residual: f64, tolerance: f64 },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("exact carriers missing: {0}")]
    MissingExact(String),

    #[error("malformed algebraic input: {0}")]
    MalformedAlgebraic(String),

    #[error("zero leading coefficient")]
    ZeroLeadingCoefficient,

    #[error("cost guard exceeded: {0}")]
    CostGuard(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("CFL violation at t={t:.6}: dt*max|u|/dx = {courant:.3} exceeds {limit:.3}")]
    Cfl { t: f64, courant: f64, limit: f64 },

    #[error("non-finite value detected at t={t:.6}")]
    NonFinite { t: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
