//! Singular background functions absorbing the point sources.
//!
//! Each zero at `z` contributes `−½ m ln(1 + λ|x − z|⁻⁴)` to `u₀` and
//! `8 m λ|x − z|²/(λ + |x − z|⁴)²` to `f`; poles contribute with the opposite
//! sign. Then `Δu₀ = 4π Σ δ_zeros − 4π Σ δ_poles − f`, and the remaining
//! unknown `v = u − u₀` is smooth.

use std::f64::consts::PI;

use crate::discretization::{DomainSpec, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::model::{Species, VortexConfiguration};

pub const DEFAULT_LAMBDA: f64 = 10.0;
pub const DEFAULT_COPIES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundData {
    pub u01: ScalarField,
    pub u02: ScalarField,
    pub f1: ScalarField,
    pub f2: ScalarField,
    pub lambda: f64,
    /// Lattice-sum truncation; `0` on the plane.
    pub copies: usize,
    /// Constant added to `fᵢ` on the torus so the grid quadrature of `fᵢ`
    /// equals `4π(Nᵢ − Pᵢ)`; zero on the plane.
    pub source_shift: [f64; 2],
}

impl BackgroundData {
    pub fn domain(&self) -> &DomainSpec {
        self.u01.domain()
    }

    /// Empty-configuration background: everything zero.
    pub fn zero(domain: DomainSpec, lambda: f64) -> Self {
        Self {
            u01: ScalarField::zeros(domain),
            u02: ScalarField::zeros(domain),
            f1: ScalarField::zeros(domain),
            f2: ScalarField::zeros(domain),
            lambda,
            copies: 0,
            source_shift: [0.0; 2],
        }
    }

    /// Torus only: moves the non-constant part of `fᵢ` into `u₀,ᵢ` by a
    /// spectral Poisson solve, leaving the uniform source `4π(Nᵢ − Pᵢ)/|S|`.
    /// Solutions `u = u₀ + v` are unchanged; only the split between `u₀` and `v`
    /// moves.
    pub fn with_uniform_source(&self) -> Result<Self> {
        let grid = Grid::new(*self.domain());
        let lift = |u0: &ScalarField, f: &ScalarField| -> Result<(ScalarField, ScalarField)> {
            let w = grid.solve_poisson_torus(f)?;
            let mean = f.mean();
            Ok((u0.zip_map(&w, |a, b| a + b), ScalarField::constant(*f.domain(), mean)))
        };
        let (u01, f1) = lift(&self.u01, &self.f1)?;
        let (u02, f2) = lift(&self.u02, &self.f2)?;
        Ok(Self { u01, u02, f1, f2, ..self.clone() })
    }
}

#[inline]
fn log_term(r2: f64, lambda: f64) -> f64 {
    0.5 * (lambda / (r2 * r2)).ln_1p()
}

#[inline]
fn source_term(r2: f64, lambda: f64) -> f64 {
    let q = lambda + r2 * r2;
    8.0 * lambda * r2 / (q * q)
}

/// Rejects invalid multiplicities and points outside the domain or on a grid node.
pub fn check_points(vc: &VortexConfiguration, domain: &DomainSpec) -> Result<()> {
    vc.validate()?;
    for (_, _, v) in vc.points() {
        if !domain.contains(v.x, v.y) {
            return Err(Error::PointOutsideDomain { x: v.x, y: v.y });
        }
        if let Some((i, j)) = domain.coincident_node(v.x, v.y) {
            return Err(Error::PointOnNode { x: v.x, y: v.y, i, j });
        }
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfiguration(format!("lambda must be positive, got {lambda}")))
    }
}

/// Signed multiplicities summed per species and exact location; points whose
/// zeros and poles cancel are dropped.
fn net_points(vc: &VortexConfiguration) -> Vec<(Species, f64, f64, f64)> {
    let mut out: Vec<(Species, f64, f64, f64)> = Vec::new();
    for (species, charge, v) in vc.points() {
        let m = v.multiplicity as f64 * charge;
        match out.iter_mut().find(|p| p.0 == species && p.2 == v.x && p.3 == v.y) {
            Some(p) => p.1 += m,
            None => out.push((species, m, v.x, v.y)),
        }
    }
    out.retain(|p| p.1 != 0.0);
    out
}

/// Accumulates the background of all points translated by `shifts`.
fn accumulate(vc: &VortexConfiguration, lambda: f64, domain: DomainSpec, shifts: &[(f64, f64)]) -> [Vec<f64>; 4] {
    let n = domain.len();
    let (mut u1, mut u2, mut f1, mut f2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (nx, ny) = domain.shape();
    for (species, m, px, py) in net_points(vc) {
        let (u, f) = match species {
            Species::Q => (&mut u1, &mut f1),
            Species::P => (&mut u2, &mut f2),
        };
        for &(sx, sy) in shifts {
            let (zx, zy) = (px + sx, py + sy);
            for j in 0..ny {
                for i in 0..nx {
                    let (x, y) = domain.node(i, j);
                    let r2 = (x - zx).powi(2) + (y - zy).powi(2);
                    let k = j * nx + i;
                    u[k] -= m * log_term(r2, lambda);
                    f[k] += m * source_term(r2, lambda);
                }
            }
        }
    }
    [u1, u2, f1, f2]
}

/// Background on the truncated plane by direct evaluation at every node.
pub fn plane_background(vc: &VortexConfiguration, lambda: f64, domain: DomainSpec) -> Result<BackgroundData> {
    if domain.is_torus() {
        return Err(Error::WrongDomain("plane"));
    }
    check_lambda(lambda)?;
    check_points(vc, &domain)?;
    let [u1, u2, f1, f2] = accumulate(vc, lambda, domain, &[(0.0, 0.0)]);
    Ok(BackgroundData {
        u01: ScalarField::from_raw(domain, u1),
        u02: ScalarField::from_raw(domain, u2),
        f1: ScalarField::from_raw(domain, f1),
        f2: ScalarField::from_raw(domain, f2),
        lambda,
        copies: 0,
        source_shift: [0.0; 2],
    })
}

/// Background on the torus: lattice sum of the plane formulas over the
/// translates `z + (k₁L₁, k₂L₂)`, `|k₁|, |k₂| ≤ copies`.
///
/// The truncated sum misses a smooth `O(λ (copies·L)⁻⁴)` remainder. Its only
/// effect on the integral identities is a constant defect in `∫fᵢ`, which is
/// removed by a uniform shift recorded in [`BackgroundData::source_shift`].
pub fn torus_background(
    vc: &VortexConfiguration,
    lambda: f64,
    copies: usize,
    domain: DomainSpec,
) -> Result<BackgroundData> {
    let DomainSpec::Torus { l1, l2, .. } = domain else {
        return Err(Error::WrongDomain("torus"));
    };
    if copies < 1 {
        return Err(Error::TooFewCopies(copies));
    }
    check_lambda(lambda)?;
    check_points(vc, &domain)?;
    let k = copies as i64;
    let shifts: Vec<(f64, f64)> =
        (-k..=k).flat_map(|a| (-k..=k).map(move |b| (a as f64 * l1, b as f64 * l2))).collect();
    let [u1, u2, mut f1, mut f2] = accumulate(vc, lambda, domain, &shifts);

    let counts = vc.counts();
    let grid_sum = |f: &[f64]| domain.cell_area() * f.iter().sum::<f64>();
    let target = [4.0 * PI * (counts.n1 - counts.p1) as f64, 4.0 * PI * (counts.n2 - counts.p2) as f64];
    let shift = [(target[0] - grid_sum(&f1)) / domain.area(), (target[1] - grid_sum(&f2)) / domain.area()];
    f1.iter_mut().for_each(|v| *v += shift[0]);
    f2.iter_mut().for_each(|v| *v += shift[1]);

    Ok(BackgroundData {
        u01: ScalarField::from_raw(domain, u1),
        u02: ScalarField::from_raw(domain, u2),
        f1: ScalarField::from_raw(domain, f1),
        f2: ScalarField::from_raw(domain, f2),
        lambda,
        copies,
        source_shift: shift,
    })
}

/// Builds the background appropriate to the domain kind.
pub fn background_for(
    vc: &VortexConfiguration,
    lambda: f64,
    copies: usize,
    domain: DomainSpec,
) -> Result<BackgroundData> {
    match domain {
        DomainSpec::Torus { .. } => torus_background(vc, lambda, copies, domain),
        DomainSpec::Plane { .. } => plane_background(vc, lambda, domain),
    }
}

/// `∫fᵢ − 4π(Nᵢ − Pᵢ)` per species, with the domain's quadrature.
///
/// Each zero contributes `+4π` to `∫f` (the `λ`-profile integrates to
/// `16πλ ∫ r³/(λ + r⁴)² dr = 4π`), each pole `−4π`.
pub fn source_balance(bd: &BackgroundData, vc: &VortexConfiguration) -> [f64; 2] {
    let grid = Grid::new(*bd.domain());
    let c = vc.counts();
    [grid.integrate(&bd.f1) - 4.0 * PI * (c.n1 - c.p1) as f64, grid.integrate(&bd.f2) - 4.0 * PI * (c.n2 - c.p2) as f64]
}
