use std::f64::consts::PI;

use duovortex::diagnostics::*;
use duovortex::*;
use proptest::prelude::*;

fn tw() -> PhysicalCouplings {
    PhysicalCouplings::new(1.0, -1.0, 0.0, 1.0).unwrap()
}

fn plane_solution(vc: &VortexConfiguration, n: usize, half_width: f64) -> Solution {
    let d = DomainSpec::plane(half_width, n).unwrap();
    let p = Problem::build(tw().coupling_matrix(), vc.clone(), d, 10.0, 0, SolverOptions::default()).unwrap();
    let s = solve(&p);
    assert!(s.converged);
    s
}

fn single_zero() -> VortexConfiguration {
    VortexConfiguration { zeros1: vec![Vortex::at(0.013, 0.021)], ..Default::default() }
}

#[test]
fn single_vortex_fluxes_charges_and_energy() {
    let vc = single_zero();
    let s = plane_solution(&vc, 161, 10.0);
    let pc = tw();
    let rep = diagnose(&s, &pc.coupling_matrix(), &vc, Some(&pc), Sign::Upper, None).unwrap();
    for t in rep.measured {
        assert!((t + PI).abs() < 0.01 * PI, "{t}");
    }
    assert_eq!(rep.flux_errors, [(rep.measured[0] + PI).abs(), (rep.measured[1] + PI).abs()]);
    let chern = rep.chern.unwrap();
    assert!((chern[0] - 1.0).abs() < 0.01 && chern[1].abs() < 0.01);
    let q = rep.charges.unwrap();
    assert!((q[0] - 2.0 * PI).abs() < 0.02 * PI && (q[1] - 2.0 * PI).abs() < 0.02 * PI);
    let e = rep.energy_topological.unwrap();
    assert!((e - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
    assert!(rep.decay.is_some());
}

#[test]
fn pole_only_energy() {
    let vc = VortexConfiguration { poles1: vec![Vortex::at(0.013, 0.021)], ..Default::default() };
    let s = plane_solution(&vc, 161, 10.0);
    let pc = tw();
    let maps = reconstruct_fields(&s, &pc, Sign::Upper);
    let curv = 2.0 * ((pc.a + pc.c) * integrate(&maps.fhat) + (pc.b + pc.d) * integrate(&maps.ftilde));
    assert!((curv + 4.0 * PI).abs() < 0.01 * 4.0 * PI, "{curv}");
    let e = topological_energy(&s, &pc, &vc, Sign::Upper);
    assert!((e - 4.0 * PI).abs() < 0.01 * 4.0 * PI);
}

#[test]
fn sign_branches_negate_curvature() {
    let vc = single_zero();
    let s = plane_solution(&vc, 65, 8.0);
    let pc = tw();
    let up = reconstruct_fields(&s, &pc, Sign::Upper);
    let lo = reconstruct_fields(&s, &pc, Sign::Lower);
    for ((_, a), (_, b)) in up.named().iter().zip(lo.named().iter()).skip(2) {
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| *x == -*y));
    }
    assert_eq!(up.q2, lo.q2);
    let (cu, cl) = (chern_numbers(&up), chern_numbers(&lo));
    assert_eq!(cu, [-cl[0], -cl[1]]);
    let (qu, ql) = (charges(&up), charges(&lo));
    assert_eq!(qu, [-ql[0], -ql[1]]);
    let eu = topological_energy(&s, &pc, &vc, Sign::Upper);
    let el = topological_energy(&s, &pc, &vc, Sign::Lower);
    assert!((eu - el).abs() < 1e-12 * eu);
}

#[test]
fn empty_configuration_gives_zero_maps() {
    let vc = VortexConfiguration::empty();
    let s = plane_solution(&vc, 33, 5.0);
    let pc = tw();
    let maps = reconstruct_fields(&s, &pc, Sign::Upper);
    for (_, f) in maps.named().iter().skip(2) {
        assert_eq!(f.sup_norm(), 0.0);
    }
    assert!(maps.q2.values().iter().all(|&v| v == 1.0));
    assert_eq!(measure_fluxes(&s), [0.0, 0.0]);
    assert_eq!(topological_energy(&s, &pc, &vc, Sign::Upper), 0.0);
}

#[test]
fn field_extremum_at_double_zero() {
    let pc = PhysicalCouplings::new(1.0, -1.0, 0.0, 1.0).unwrap();
    let d = DomainSpec::plane(8.0, 96).unwrap();
    let (h, _) = d.spacing();
    let (x0, y0) = d.node(48, 48);
    let vc = VortexConfiguration { zeros1: vec![Vortex::new(x0 + 0.1 * h, y0 + 0.1 * h, 2)], ..Default::default() };
    let p = Problem::build(pc.coupling_matrix(), vc, d, 10.0, 0, SolverOptions::default()).unwrap();
    let s = solve(&p);
    let maps = reconstruct_fields(&s, &pc, Sign::Upper);
    let bound = 2.0 * pc.determinant().abs();
    assert!((maps.b1.get(48, 48).abs() - bound).abs() < 0.05 * bound);
    assert!(maps.q2.get(48, 48) < 1e-3);
    for f in [&maps.b1, &maps.b2] {
        assert!(f.sup_norm() <= bound);
    }
}

#[test]
fn decay_window_validation() {
    let vc = single_zero();
    let s = plane_solution(&vc, 65, 8.0);
    let cm = tw().coupling_matrix();
    let bad = [
        DecayWindow { r_lo: 7.0, r_hi: 7.9 },  // boundary-affected zone
        DecayWindow { r_lo: 0.01, r_hi: 4.0 }, // encloses the vortex
        DecayWindow { r_lo: 4.0, r_hi: 4.05 }, // too few nodes
        DecayWindow { r_lo: 5.0, r_hi: 4.0 },
    ];
    for w in bad {
        assert!(matches!(fit_decay_rate(&s, &cm, &vc, w), Err(Error::InvalidWindow(_))), "{w:?}");
    }
    let fit = fit_decay_rate(&s, &cm, &vc, DecayWindow::default_for(s.u1.domain()).unwrap()).unwrap();
    assert!(fit.nodes >= DecayWindow::MIN_NODES && fit.rate > 0.0);

    let t = DomainSpec::torus(2.0 * PI, 2.0 * PI, 16, 16).unwrap();
    let p = Problem::build(cm, VortexConfiguration::empty(), t, 10.0, 1, SolverOptions::default()).unwrap();
    let ts = solve(&p);
    assert_eq!(fit_decay_rate(&ts, &cm, &vc, DecayWindow { r_lo: 1.0, r_hi: 2.0 }), Err(Error::WrongDomain("plane")));
    assert!(DecayWindow::default_for(&t).is_none());
}

#[test]
fn decay_follows_linearized_rate() {
    let vc = single_zero();
    let s = plane_solution(&vc, 129, 12.0);
    let cm = tw().coupling_matrix();
    let fit = fit_decay_rate(&s, &cm, &vc, DecayWindow { r_lo: 6.0, r_hi: 10.0 }).unwrap();
    let rates = decay_rates(&cm, None);
    // the K0 profile adds roughly 1/r to the slope of the squared field
    let expected = rates.linearized_squared_rate() + 1.0 / 8.0;
    assert!((fit.rate - expected).abs() < 0.05 * expected, "{} vs {expected}", fit.rate);
    assert!(fit.rate >= 0.9 * rates.lambda0.sqrt());
}

#[test]
fn overflow_maps_use_sentinel() {
    let d = DomainSpec::plane(2.0, 9).unwrap();
    let cm = tw().coupling_matrix();
    let p = Problem::build(cm, VortexConfiguration::empty(), d, 10.0, 0, SolverOptions::default()).unwrap();
    let mut s = solve(&p);
    s.u1.values_mut()[0] = 800.0;
    let maps = reconstruct_fields(&s, &tw(), Sign::Upper);
    assert_eq!(maps.q2.values()[0], OVERFLOW_SENTINEL);
    assert!(maps.b1.values()[0].is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn field_bound_holds_pointwise(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64, u in -50.0..50.0f64, w in -50.0..50.0f64) {
        prop_assume!((a * d - b * c).abs() > 1e-3);
        let pc = PhysicalCouplings::new(a, b, c, d).unwrap();
        let dom = DomainSpec::plane(1.0, 3).unwrap();
        let p = Problem::build(pc.coupling_matrix(), VortexConfiguration::empty(), dom, 10.0, 0, SolverOptions::default()).unwrap();
        let mut s = solve(&p);
        s.u1.values_mut().iter_mut().for_each(|x| *x = u);
        s.u2.values_mut().iter_mut().for_each(|x| *x = w);
        let maps = reconstruct_fields(&s, &pc, Sign::Upper);
        let bound = 2.0 * (a * d - b * c).abs();
        prop_assert!(maps.b1.sup_norm() <= bound && maps.b2.sup_norm() <= bound);
    }
}
