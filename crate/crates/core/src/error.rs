use thiserror::Error;

/// Errors raised by the conversion toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("empty state family")]
    EmptyFamily,

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("diagonal entry {index} deviates from 1 by {deviation:e}")]
    NotUnitDiagonal { index: usize, deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("Gram matrices differ by {0:e}: no unitary maps one family onto the other")]
    GramMismatch(f64),

    #[error("classical states are not linearly independent (min Gram eigenvalue {0:e})")]
    NotIndependent(f64),

    #[error("epsilon {epsilon} is infeasible (supremum of feasible values is {max})")]
    InfeasibleEpsilon { epsilon: f64, max: f64 },

    #[error("cannot split dimension {dim} as {dim_a} x {dim_b}")]
    BadCut { dim: usize, dim_a: usize, dim_b: usize },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("sector ({n_a}, {n_b}) has zero probability")]
    ZeroProbabilitySector { n_a: usize, n_b: usize },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
