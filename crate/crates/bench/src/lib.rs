//! Fixtures shared by the benchmarks in `benches/`.

use std::f64::consts::PI;

use duovortex::{CouplingMatrix, DomainSpec, PhysicalCouplings, Problem, SolverOptions, Vortex, VortexConfiguration};

/// Single zero near the origin, couplings `(1, −1, 0, 1)`, half-width 12.
pub fn plane_problem(n: usize) -> Problem {
    let cm = PhysicalCouplings::new(1.0, -1.0, 0.0, 1.0).unwrap().coupling_matrix();
    let vc = VortexConfiguration { zeros1: vec![Vortex::at(0.013, 0.021)], ..Default::default() };
    let d = DomainSpec::plane(12.0, n).unwrap();
    Problem::build(cm, vc, d, 10.0, 0, SolverOptions::default()).unwrap()
}

/// Two zeros and a pole on the `2π × 2π` torus.
pub fn torus_problem(n: usize) -> Problem {
    let cm = CouplingMatrix::new(4.0, 1.0, 1.0, 4.0).unwrap();
    let vc = VortexConfiguration {
        zeros1: vec![Vortex::at(1.013, 2.029), Vortex::at(4.107, 3.071)],
        poles2: vec![Vortex::at(3.053, 5.213)],
        ..Default::default()
    };
    let d = DomainSpec::torus(2.0 * PI, 2.0 * PI, n, n).unwrap();
    Problem::build(cm, vc, d, 10.0, 3, SolverOptions::default()).unwrap()
}
