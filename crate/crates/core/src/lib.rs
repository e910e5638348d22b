//! Vortex–antivortex solutions of a dually gauged harmonic map model.
//!
//! The crate solves the coupled reduced system
//!
//! ```text
//! Δuᵢ = aᵢ₁ τ(u₁) + aᵢ₂ τ(u₂) + 4π Σ δ(zeros) − 4π Σ δ(poles),   τ(u) = tanh(u/2)
//! ```
//!
//! on a doubly periodic cell or on a truncated square standing in for the
//! plane, then measures fluxes, reconstructs gauge fields and checks decay.

pub mod background;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod model;
pub mod oracle;
pub mod solver;
mod spectral;

pub use background::{
    background_for, check_points, plane_background, source_balance, torus_background, BackgroundData,
};
pub use discretization::{integrate, laplacian, solve_poisson_torus, DomainSpec, Grid, ScalarField};
pub use error::{Error, Result};
pub use model::{
    check_torus_feasibility, couplings_from_physical, decay_rates, predicted_fluxes, CouplingMatrix, DecayRates,
    FeasibilityReport, FluxPrediction, PhysicalCouplings, Sign, Vortex, VortexConfiguration, VortexCounts,
};
pub use solver::{evaluate_functional, solve, Problem, Solution, SolverOptions, Termination};
