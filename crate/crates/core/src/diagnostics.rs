//! Observables measured from a solution and their closed-form counterparts.

use std::f64::consts::PI;

use crate::discretization::{integrate, DomainSpec, ScalarField};
use crate::error::{Error, Result};
use crate::model::{
    decay_rates, predicted_fluxes, tau, CouplingMatrix, DecayRates, FluxPrediction, PhysicalCouplings, Sign,
    VortexConfiguration,
};
use crate::solver::Solution;

/// Stored in `|q|²`, `|p|²` maps where `eᵘ` overflows.
pub const OVERFLOW_SENTINEL: f64 = f64::MAX;

/// `∫τ(u₁)`, `∫τ(u₂)` with the domain quadrature.
pub fn measure_fluxes(sol: &Solution) -> [f64; 2] {
    if !sol.converged {
        log::warn!("measuring fluxes of a non-converged solution (residual {:e})", sol.residual_sup);
    }
    [integrate(&sol.u1.map(tau)), integrate(&sol.u2.map(tau))]
}

/// Gauge-invariant field maps of the BPS solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMaps {
    pub q2: ScalarField,
    pub p2: ScalarField,
    pub b1: ScalarField,
    pub b2: ScalarField,
    pub fhat: ScalarField,
    pub ftilde: ScalarField,
}

impl FieldMaps {
    /// Maps in the order `q2, p2, B1, B2, Fhat, Ftilde`, with their names.
    pub fn named(&self) -> [(&'static str, &ScalarField); 6] {
        [
            ("q2", &self.q2),
            ("p2", &self.p2),
            ("B1", &self.b1),
            ("B2", &self.b2),
            ("Fhat", &self.fhat),
            ("Ftilde", &self.ftilde),
        ]
    }
}

fn clamped_exp(u: f64) -> f64 {
    let e = u.exp();
    if e.is_finite() {
        e
    } else {
        OVERFLOW_SENTINEL
    }
}

pub fn reconstruct_fields(sol: &Solution, pc: &PhysicalCouplings, sign: Sign) -> FieldMaps {
    let s = -2.0 * sign.factor();
    let det = pc.determinant();
    let PhysicalCouplings { a, b, c, d } = *pc;
    let t1 = sol.u1.map(tau);
    let t2 = sol.u2.map(tau);
    FieldMaps {
        q2: sol.u1.map(clamped_exp),
        p2: sol.u2.map(clamped_exp),
        b1: t1.map(|t| s * det * t),
        b2: t2.map(|t| s * det * t),
        fhat: t1.zip_map(&t2, |x, y| s * (a * x + c * y)),
        ftilde: t1.zip_map(&t2, |x, y| s * (b * x + d * y)),
    }
}

/// `(1/2π)∫F̂`, `(1/2π)∫F̃`.
pub fn chern_numbers(maps: &FieldMaps) -> [f64; 2] {
    [integrate(&maps.fhat) / (2.0 * PI), integrate(&maps.ftilde) / (2.0 * PI)]
}

/// `∫B₁`, `∫B₂`.
pub fn charges(maps: &FieldMaps) -> [f64; 2] {
    [integrate(&maps.b1), integrate(&maps.b2)]
}

/// `±2[(a+c)∫F̂ + (b+d)∫F̃] + 8π(P₁+P₂)`, with the Thom values taken from the
/// configured pole counts.
pub fn topological_energy(sol: &Solution, pc: &PhysicalCouplings, vc: &VortexConfiguration, sign: Sign) -> f64 {
    let maps = reconstruct_fields(sol, pc, sign);
    topological_energy_from_maps(&maps, pc, vc, sign)
}

pub fn topological_energy_from_maps(
    maps: &FieldMaps,
    pc: &PhysicalCouplings,
    vc: &VortexConfiguration,
    sign: Sign,
) -> f64 {
    let c = vc.counts();
    let curv = (pc.a + pc.c) * integrate(&maps.fhat) + (pc.b + pc.d) * integrate(&maps.ftilde);
    sign.factor() * 2.0 * curv + 8.0 * PI * (c.p1 + c.p2) as f64
}

/// Annulus `r_lo ≤ |x| ≤ r_hi` used for the tail fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayWindow {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl DecayWindow {
    pub const MIN_NODES: usize = 100;

    /// `[R/2, 5R/6]` for a plane of half-width `R`.
    pub fn default_for(domain: &DomainSpec) -> Option<Self> {
        match *domain {
            DomainSpec::Plane { half_width, .. } => Some(Self { r_lo: 0.5 * half_width, r_hi: 5.0 * half_width / 6.0 }),
            DomainSpec::Torus { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Negated least-squares slope of `ln(u₁² + ρu₂²)` against `|x|`.
    pub rate: f64,
    pub window: DecayWindow,
    pub nodes: usize,
}

/// Fits the exponential decay rate of `u₁² + ρ u₂²` over `window`.
///
/// The window must lie beyond every vortex point and inside `|x| ≤ 5R/6`;
/// outside that radius the zero boundary values distort the tail.
pub fn fit_decay_rate(
    sol: &Solution,
    cm: &CouplingMatrix,
    vc: &VortexConfiguration,
    window: DecayWindow,
) -> Result<DecayFit> {
    let domain = *sol.u1.domain();
    let DomainSpec::Plane { half_width, .. } = domain else {
        return Err(Error::WrongDomain("plane"));
    };
    let DecayWindow { r_lo, r_hi } = window;
    if !(r_lo.is_finite() && r_hi.is_finite() && 0.0 <= r_lo && r_lo < r_hi) {
        return Err(Error::InvalidWindow(format!("need 0 <= r_lo < r_hi, got [{r_lo}, {r_hi}]")));
    }
    let limit = 5.0 * half_width / 6.0;
    if r_hi > limit * (1.0 + 1e-12) {
        return Err(Error::InvalidWindow(format!("r_hi = {r_hi} reaches the boundary-affected zone |x| > {limit}")));
    }
    let r_max = vc.max_radius_from(0.0, 0.0);
    if r_lo <= r_max {
        return Err(Error::InvalidWindow(format!("r_lo = {r_lo} does not clear the vortex points (|x| <= {r_max})")));
    }
    let rho = cm.symmetrizer();
    let (nx, ny) = domain.shape();
    let (mut n, mut sr, mut sy, mut srr, mut sry) = (0usize, 0.0, 0.0, 0.0, 0.0);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = domain.node(i, j);
            let r = x.hypot(y);
            if r < r_lo || r > r_hi {
                continue;
            }
            let (a, b) = (sol.u1.get(i, j), sol.u2.get(i, j));
            let w = a * a + rho * b * b;
            if w.is_nan() || w < 1e-300 {
                continue;
            }
            let l = w.ln();
            n += 1;
            sr += r;
            sy += l;
            srr += r * r;
            sry += r * l;
        }
    }
    if n < DecayWindow::MIN_NODES {
        return Err(Error::InvalidWindow(format!(
            "only {n} usable nodes in [{r_lo}, {r_hi}], need {}",
            DecayWindow::MIN_NODES
        )));
    }
    let nf = n as f64;
    let slope = (nf * sry - sr * sy) / (nf * srr - sr * sr);
    Ok(DecayFit { rate: -slope, window, nodes: n })
}

/// Everything measured from one solve, next to its predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub measured: [f64; 2],
    pub predicted: FluxPrediction,
    pub flux_errors: [f64; 2],
    pub chern: Option<[f64; 2]>,
    pub charges: Option<[f64; 2]>,
    pub energy_topological: Option<f64>,
    pub decay: Option<DecayFit>,
    pub rates: DecayRates,
    pub maps: Option<FieldMaps>,
}

/// Builds the full report. On the plane the decay fit uses `window`, or the
/// default annulus when `None` (omitted if that annulus is unusable).
pub fn diagnose(
    sol: &Solution,
    cm: &CouplingMatrix,
    vc: &VortexConfiguration,
    pc: Option<&PhysicalCouplings>,
    sign: Sign,
    window: Option<DecayWindow>,
) -> Result<DiagnosticsReport> {
    let measured = measure_fluxes(sol);
    let predicted = predicted_fluxes(cm, vc, pc).oriented(sign);
    let flux_errors = [(measured[0] - predicted.t1).abs(), (measured[1] - predicted.t2).abs()];
    let maps = pc.map(|pc| reconstruct_fields(sol, pc, sign));
    let domain = sol.u1.domain();
    let decay = match (window, DecayWindow::default_for(domain)) {
        (Some(w), _) => Some(fit_decay_rate(sol, cm, vc, w)?),
        (None, Some(w)) => fit_decay_rate(sol, cm, vc, w).ok(),
        (None, None) => None,
    };
    Ok(DiagnosticsReport {
        measured,
        predicted,
        flux_errors,
        chern: maps.as_ref().map(chern_numbers),
        charges: maps.as_ref().map(charges),
        energy_topological: maps.as_ref().zip(pc).map(|(m, pc)| topological_energy_from_maps(m, pc, vc, sign)),
        decay,
        rates: decay_rates(cm, pc),
        maps,
    })
}
