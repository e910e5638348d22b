use thiserror::Error;

/// Errors raised while building or solving a vortex problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate couplings: ad - bc = 0 (a={a}, b={b}, c={c}, d={d})")]
    DegenerateCouplings { a: f64, b: f64, c: f64, d: f64 },

    #[error("invalid coupling matrix: {0}")]
    InvalidCouplingMatrix(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid vortex configuration: {0}")]
    InvalidConfiguration(String),

    #[error("vortex point ({x}, {y}) lies outside the domain")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("vortex point ({x}, {y}) coincides with grid node ({i}, {j})")]
    PointOnNode { x: f64, y: f64, i: usize, j: usize },

    #[error("field shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),

    #[error("torus configuration violates the solvability bound ({lhs} >= {rhs}); set force to run anyway")]
    Infeasible { lhs: f64, rhs: f64 },

    #[error("torus background needs at least one lattice copy, got {0}")]
    TooFewCopies(usize),

    #[error("invalid decay window: {0}")]
    InvalidWindow(String),

    #[error("operation requires a {0} domain")]
    WrongDomain(&'static str),

    #[error("radial relaxation did not converge: residual {residual:e} after {iterations} iterations")]
    RadialNonConvergence { residual: f64, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
