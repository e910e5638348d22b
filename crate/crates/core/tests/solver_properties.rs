mod common;

use std::f64::consts::PI;

use common::random_field;
use duovortex::diagnostics::measure_fluxes;
use duovortex::solver::{gradient, residual, solve_from};
use duovortex::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coupled() -> CouplingMatrix {
    CouplingMatrix::new(8.0, -4.0, -4.0, 4.0).unwrap()
}

fn plane_problem(n: usize, cm: CouplingMatrix) -> Problem {
    let d = DomainSpec::plane(6.0, n).unwrap();
    let vc = VortexConfiguration {
        zeros1: vec![Vortex::at(0.31, 0.17)],
        poles2: vec![Vortex::at(-1.23, 0.58)],
        ..Default::default()
    };
    Problem::build(cm, vc, d, 10.0, 0, SolverOptions::default()).unwrap()
}

fn torus_problem(n: usize, cm: CouplingMatrix) -> Problem {
    let d = DomainSpec::torus(2.0 * PI, 2.0 * PI, n, n).unwrap();
    let vc = VortexConfiguration {
        zeros1: vec![Vortex::at(3.01, 3.13)],
        zeros2: vec![Vortex::at(1.05, 4.7)],
        ..Default::default()
    };
    Problem::build(cm, vc, d, 10.0, 3, SolverOptions::default()).unwrap()
}

fn j(p: &Problem, v1: &ScalarField, v2: &ScalarField) -> f64 {
    evaluate_functional(p, v1, v2).unwrap()
}

fn gradient_check(p: &Problem, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = *p.domain();
    let eps = 1e-5;
    let h2 = d.cell_area();
    for _ in 0..20 {
        let v1 = random_field(d, &mut rng, 1.0);
        let v2 = random_field(d, &mut rng, 1.0);
        let w1 = random_field(d, &mut rng, 1.0);
        let w2 = random_field(d, &mut rng, 1.0);
        let shift = |s: f64| (v1.zip_map(&w1, |a, b| a + s * b), v2.zip_map(&w2, |a, b| a + s * b));
        let (p1, p2) = shift(eps);
        let (m1, m2) = shift(-eps);
        let fd = (j(p, &p1, &p2) - j(p, &m1, &m2)) / (2.0 * eps);
        let (g1, g2) = gradient(p, &v1, &v2).unwrap();
        let dot = h2
            * (g1.values().iter().zip(w1.values()).map(|(a, b)| a * b).sum::<f64>()
                + g2.values().iter().zip(w2.values()).map(|(a, b)| a * b).sum::<f64>());
        assert!((fd - dot).abs() <= 1e-6 * dot.abs().max(1.0), "fd {fd} vs {dot}");

        // the gradient is the residual mixed by the symmetrizing weights
        let (r1, r2) = residual(p, &v1, &v2).unwrap();
        let cm = p.couplings();
        let rho = cm.symmetrizer();
        let mixed = h2
            * (0..d.len())
                .map(|k| {
                    let (a, b) = (r1.values()[k], r2.values()[k]);
                    -(cm.a22() * a - cm.a12() * b) * w1.values()[k]
                        - rho * (cm.a11() * b - cm.a21() * a) * w2.values()[k]
                })
                .sum::<f64>();
        assert!((fd - mixed).abs() <= 1e-6 * mixed.abs().max(1.0), "fd {fd} vs residual {mixed}");
    }
}

#[test]
fn finite_differences_match_gradient_plane() {
    gradient_check(&plane_problem(41, coupled()), 1);
    gradient_check(&plane_problem(41, CouplingMatrix::new(4.0, 2.0, 0.5, 3.0).unwrap()), 2);
}

#[test]
fn finite_differences_match_gradient_torus() {
    gradient_check(&torus_problem(32, coupled()), 3);
    gradient_check(&torus_problem(32, CouplingMatrix::new(4.0, 0.0, 0.0, 4.0).unwrap()), 4);
}

#[test]
fn midpoint_convexity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [plane_problem(33, coupled()), torus_problem(32, coupled())] {
        let d = *p.domain();
        for _ in 0..50 {
            let x = (random_field(d, &mut rng, 3.0), random_field(d, &mut rng, 3.0));
            let y = (random_field(d, &mut rng, 3.0), random_field(d, &mut rng, 3.0));
            let mid = (x.0.zip_map(&y.0, |a, b| 0.5 * (a + b)), x.1.zip_map(&y.1, |a, b| 0.5 * (a + b)));
            let (jx, jy, jm) = (j(&p, &x.0, &x.1), j(&p, &y.0, &y.1), j(&p, &mid.0, &mid.1));
            let avg = 0.5 * (jx + jy);
            assert!(jm < avg - 1e-9 * avg.abs().max(1.0), "{jm} vs {avg}");
        }
        let x = (random_field(d, &mut rng, 1.0), random_field(d, &mut rng, 1.0));
        assert_eq!(j(&p, &x.0, &x.1), 0.5 * (j(&p, &x.0, &x.1) + j(&p, &x.0, &x.1)));
    }
}

#[test]
fn functional_grows_along_rays() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [plane_problem(33, coupled()), torus_problem(32, coupled())] {
        let d = *p.domain();
        for _ in 0..10 {
            let w1 = random_field(d, &mut rng, 1.0).map(|v| v + 0.3);
            let w2 = random_field(d, &mut rng, 1.0);
            let along = |t: f64| j(&p, &w1.map(|v| t * v), &w2.map(|v| t * v));
            let (j10, j20, j40) = (along(10.0), along(20.0), along(40.0));
            assert!(j20 - j10 > 0.0 && j40 - j20 >= 2.0 * (j20 - j10) * (1.0 - 1e-9), "{j10} {j20} {j40}");
        }
    }
}

#[test]
fn solves_from_different_starts_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [plane_problem(65, coupled()), torus_problem(64, coupled())] {
        let d = *p.domain();
        let a = solve(&p);
        let b = solve_from(&p, &random_field(d, &mut rng, 2.0), &random_field(d, &mut rng, 2.0)).unwrap();
        assert!(a.converged && b.converged);
        let diff = a.v1.zip_map(&b.v1, |x, y| x - y).sup_norm().max(a.v2.zip_map(&b.v2, |x, y| x - y).sup_norm());
        assert!(diff <= 1e-8, "{diff}");
    }
}

#[test]
fn functional_never_increases() {
    for p in [plane_problem(65, coupled()), torus_problem(64, CouplingMatrix::new(4.0, 2.0, 0.5, 3.0).unwrap())] {
        let s = solve(&p);
        assert!(s.converged);
        assert!(s.residual_sup <= 1e-10);
        for w in s.history.windows(2) {
            assert!(w[1].j_value <= w[0].j_value);
        }
        for k in 0..p.domain().len() {
            assert_eq!(s.u1.values()[k], p.background().u01.values()[k] + s.v1.values()[k]);
            assert_eq!(s.u2.values()[k], p.background().u02.values()[k] + s.v2.values()[k]);
        }
    }
}

#[test]
fn torus_flux_identity_at_convergence() {
    let cm = CouplingMatrix::new(4.0, 2.0, 0.5, 3.0).unwrap();
    let p = torus_problem(64, cm);
    let s = solve(&p);
    assert!(s.converged);
    let [t1, t2] = measure_fluxes(&s);
    let c = p.vortices().counts();
    let area = p.domain().area();
    let tol = 10.0 * 1e-10 * area;
    assert!((cm.a11() * t1 + cm.a12() * t2 - 4.0 * PI * (c.p1 - c.n1) as f64).abs() <= tol * (cm.a11() + cm.a12()));
    assert!((cm.a21() * t1 + cm.a22() * t2 - 4.0 * PI * (c.p2 - c.n2) as f64).abs() <= tol * (cm.a21() + cm.a22()));
}

#[test]
fn degenerate_configurations_stop_at_iteration_zero() {
    let cancel = VortexConfiguration {
        zeros1: vec![Vortex::at(0.3, 0.2)],
        poles1: vec![Vortex::at(0.3, 0.2)],
        ..Default::default()
    };
    for d in [DomainSpec::plane(5.0, 48).unwrap(), DomainSpec::torus(2.0 * PI, 2.0 * PI, 32, 32).unwrap()] {
        for vc in [VortexConfiguration::empty(), cancel.clone()] {
            let p = Problem::build(coupled(), vc, d, 10.0, 3, SolverOptions::default()).unwrap();
            let s = solve(&p);
            assert_eq!(s.iterations, 0);
            assert!(s.converged);
            assert_eq!(s.residual_sup, 0.0);
            assert_eq!(s.v1.sup_norm() + s.v2.sup_norm(), 0.0);
        }
    }
}

#[test]
fn decoupled_species_stay_independent() {
    let d = DomainSpec::plane(8.0, 64).unwrap();
    let vc = VortexConfiguration { zeros1: vec![Vortex::at(0.0, 0.0)], ..Default::default() };
    let p = Problem::build(CouplingMatrix::new(4.0, 0.0, 0.0, 4.0).unwrap(), vc, d, 10.0, 0, SolverOptions::default())
        .unwrap();
    let s = solve(&p);
    assert!(s.converged);
    assert_eq!(s.u2.sup_norm(), 0.0);
}

#[test]
fn forced_infeasible_torus_drifts() {
    let cm = CouplingMatrix::new(4.0, 1.0, 1.0, 4.0).unwrap();
    let vc = VortexConfiguration { zeros1: vec![Vortex::new(3.1, 3.2, 12)], ..Default::default() };
    let d = DomainSpec::torus(2.0 * PI, 2.0 * PI, 32, 32).unwrap();
    assert!(matches!(
        Problem::build(cm, vc.clone(), d, 10.0, 3, SolverOptions::default()),
        Err(Error::Infeasible { .. })
    ));
    let p = Problem::build(cm, vc, d, 10.0, 3, SolverOptions { force: true, ..Default::default() }).unwrap();
    let s = solve(&p);
    assert!(!s.converged);
    assert_eq!(s.termination, Termination::MaxIterations);
    let drift: Vec<f64> = s.history.iter().map(|h| h.mean_v1.abs()).collect();
    assert!(drift.windows(2).all(|w| w[1] > w[0]));
    assert!(*drift.last().unwrap() > 1e3);
}

#[test]
fn problems_are_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<Problem>();
    assert_send_sync::<Solution>();
    let p = plane_problem(33, coupled());
    let here = solve(&p);
    let there = std::thread::scope(|s| s.spawn(|| solve(&p)).join().unwrap());
    assert_eq!(here.v1, there.v1);
    assert_eq!(here.j_value, there.j_value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn residual_vanishes_only_for_background_free_data(c in -3.0..3.0f64) {
        // constant v on an empty torus: residual is −(A τ(c), …), zero only at c = 0
        let d = DomainSpec::torus(2.0 * PI, 2.0 * PI, 8, 8).unwrap();
        let p = Problem::build(coupled(), VortexConfiguration::empty(), d, 10.0, 1, SolverOptions::default()).unwrap();
        let v = ScalarField::constant(d, c);
        let z = ScalarField::zeros(d);
        let (r1, _) = residual(&p, &v, &z).unwrap();
        let t = duovortex::model::tau(c);
        prop_assert!((r1.values()[0] + 8.0 * t).abs() < 1e-9);
        prop_assert!(j(&p, &v, &z) >= 0.0);
    }
}
