//! Coupling parameters, vortex data and the closed-form predictions that
//! follow from them: solvability on a compact surface, quantized integrals,
//! Chern fluxes, magnetic charges, energy and exponential decay constants.
//!
//! The reduced equations are
//!
//! ```text
//! Δu₁ = a11 τ(u₁) + a12 τ(u₂) + 4π Σ δ(zeros₁) − 4π Σ δ(poles₁)
//! Δu₂ = a21 τ(u₁) + a22 τ(u₂) + 4π Σ δ(zeros₂) − 4π Σ δ(poles₂)
//! ```
//!
//! with `τ(u) = (eᵘ − 1)/(eᵘ + 1) = tanh(u/2)`, `u₁ = ln|q|²`, `u₂ = ln|p|²`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Evaluates `(eᵘ − 1)/(eᵘ + 1)` without overflow.
#[inline]
pub fn tau(u: f64) -> f64 {
    (0.5 * u).tanh()
}

/// Derivative of [`tau`]: `½ sech²(u/2)`.
#[inline]
pub fn tau_prime(u: f64) -> f64 {
    let c = (0.5 * u.abs()).cosh();
    if c.is_finite() {
        0.5 / (c * c)
    } else {
        0.0
    }
}

/// The charge parameters `(a, b, c, d)` of the two gauge fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalCouplings {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl PhysicalCouplings {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let pc = Self { a, b, c, d };
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) || pc.determinant() == 0.0 {
            return Err(Error::DegenerateCouplings { a, b, c, d });
        }
        Ok(pc)
    }

    /// `ad − bc`.
    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Coefficient matrix of the reduced equations; see [`couplings_from_physical`].
    pub fn coupling_matrix(&self) -> CouplingMatrix {
        couplings_from_physical(self)
    }
}

/// Coefficients `a_ij` of the reduced system. Need not be symmetric.
///
/// Accepted matrices satisfy `a11 > 0`, `det > 0` and either `a12·a21 > 0`
/// or `a12 = a21 = 0` (two independent scalar problems).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix {
    a11: f64,
    a12: f64,
    a21: f64,
    a22: f64,
}

impl CouplingMatrix {
    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Result<Self> {
        if ![a11, a12, a21, a22].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCouplingMatrix("non-finite entry".into()));
        }
        if a11 <= 0.0 {
            return Err(Error::InvalidCouplingMatrix(format!("a11 = {a11} must be positive")));
        }
        let decoupled = a12 == 0.0 && a21 == 0.0;
        if !decoupled && a12 * a21 <= 0.0 {
            return Err(Error::InvalidCouplingMatrix(format!(
                "a12·a21 = {} must be positive (or a12 = a21 = 0)",
                a12 * a21
            )));
        }
        let det = a11 * a22 - a12 * a21;
        if det <= 0.0 {
            return Err(Error::InvalidCouplingMatrix(format!("determinant {det} must be positive")));
        }
        Ok(Self { a11, a12, a21, a22 })
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }
    pub fn a12(&self) -> f64 {
        self.a12
    }
    pub fn a21(&self) -> f64 {
        self.a21
    }
    pub fn a22(&self) -> f64 {
        self.a22
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn is_decoupled(&self) -> bool {
        self.a12 == 0.0 && self.a21 == 0.0
    }

    /// The ratio `a12/a21` that symmetrizes the system; `1` in decoupled mode.
    pub fn symmetrizer(&self) -> f64 {
        if self.is_decoupled() {
            1.0
        } else {
            self.a12 / self.a21
        }
    }

    /// `Ã = diag(1, a12/a21)·A`, symmetric and positive definite.
    pub fn symmetrized(&self) -> [[f64; 2]; 2] {
        let rho = self.symmetrizer();
        [[self.a11, self.a12], [rho * self.a21, rho * self.a22]]
    }

    /// Eigenvalues of `A` itself in ascending order. They are real and
    /// positive because `A` is similar to a symmetric positive definite matrix.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_tr = 0.5 * (self.a11 + self.a22);
        let disc = (half_tr * half_tr - self.det()).max(0.0).sqrt();
        [half_tr - disc, half_tr + disc]
    }
}

/// `a11 = 4(a²+b²)`, `a12 = a21 = 4(ac+bd)`, `a22 = 4(c²+d²)`.
pub fn couplings_from_physical(pc: &PhysicalCouplings) -> CouplingMatrix {
    let PhysicalCouplings { a, b, c, d } = *pc;
    let off = 4.0 * (a * c + b * d);
    // det = 16(ad − bc)² > 0, a11 > 0
    CouplingMatrix { a11: 4.0 * (a * a + b * b), a12: off, a21: off, a22: 4.0 * (c * c + d * d) }
}

/// Which of the two first-order systems a solution satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sign {
    #[default]
    Upper,
    Lower,
}

impl Sign {
    /// `+1` for the upper branch, `−1` for the lower.
    pub fn factor(self) -> f64 {
        match self {
            Sign::Upper => 1.0,
            Sign::Lower => -1.0,
        }
    }
}

/// A prescribed zero or pole with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    pub multiplicity: u32,
}

impl Vortex {
    pub fn new(x: f64, y: f64, multiplicity: u32) -> Self {
        Self { x, y, multiplicity }
    }

    pub fn at(x: f64, y: f64) -> Self {
        Self::new(x, y, 1)
    }
}

/// Species index of a vortex point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Q,
    P,
}

/// Zeros and poles of `q` (species 1) and `p` (species 2).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VortexConfiguration {
    pub zeros1: Vec<Vortex>,
    pub poles1: Vec<Vortex>,
    pub zeros2: Vec<Vortex>,
    pub poles2: Vec<Vortex>,
}

/// Total multiplicities `(N1, P1, N2, P2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VortexCounts {
    pub n1: i64,
    pub p1: i64,
    pub n2: i64,
    pub p2: i64,
}

impl VortexCounts {
    pub fn new(n1: i64, p1: i64, n2: i64, p2: i64) -> Self {
        Self { n1, p1, n2, p2 }
    }

    /// `(N1 − P1, N2 − P2)`.
    pub fn net(&self) -> (f64, f64) {
        ((self.n1 - self.p1) as f64, (self.n2 - self.p2) as f64)
    }

    pub fn total(&self) -> i64 {
        self.n1 + self.p1 + self.n2 + self.p2
    }
}

fn total(list: &[Vortex]) -> i64 {
    list.iter().map(|v| v.multiplicity as i64).sum()
}

impl VortexConfiguration {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn counts(&self) -> VortexCounts {
        VortexCounts {
            n1: total(&self.zeros1),
            p1: total(&self.poles1),
            n2: total(&self.zeros2),
            p2: total(&self.poles2),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.zeros1.is_empty() && self.poles1.is_empty() && self.zeros2.is_empty() && self.poles2.is_empty()
    }

    /// Every point with its species and charge (`+1` zero, `−1` pole).
    pub fn points(&self) -> impl Iterator<Item = (Species, f64, &Vortex)> {
        self.zeros1
            .iter()
            .map(|v| (Species::Q, 1.0, v))
            .chain(self.poles1.iter().map(|v| (Species::Q, -1.0, v)))
            .chain(self.zeros2.iter().map(|v| (Species::P, 1.0, v)))
            .chain(self.poles2.iter().map(|v| (Species::P, -1.0, v)))
    }

    /// Largest distance of any vortex point from `(cx, cy)`.
    pub fn max_radius_from(&self, cx: f64, cy: f64) -> f64 {
        self.points().map(|(_, _, v)| (v.x - cx).hypot(v.y - cy)).fold(0.0, f64::max)
    }

    /// Zeros and poles exchanged; maps the lower sign branch onto the upper one.
    pub fn swapped(&self) -> Self {
        Self {
            zeros1: self.poles1.clone(),
            poles1: self.zeros1.clone(),
            zeros2: self.poles2.clone(),
            poles2: self.zeros2.clone(),
        }
    }

    /// Disjoint union of two configurations.
    pub fn union(&self, other: &Self) -> Self {
        let cat = |a: &[Vortex], b: &[Vortex]| a.iter().chain(b).copied().collect::<Vec<_>>();
        Self {
            zeros1: cat(&self.zeros1, &other.zeros1),
            poles1: cat(&self.poles1, &other.poles1),
            zeros2: cat(&self.zeros2, &other.zeros2),
            poles2: cat(&self.poles2, &other.poles2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (_, _, v) in self.points() {
            if v.multiplicity == 0 {
                return Err(Error::InvalidConfiguration(format!("point ({}, {}) has multiplicity 0", v.x, v.y)));
            }
            if !(v.x.is_finite() && v.y.is_finite()) {
                return Err(Error::InvalidConfiguration("non-finite vortex coordinate".into()));
            }
        }
        Ok(())
    }
}

/// Both sides of the torus solvability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub lhs1: f64,
    pub lhs2: f64,
    pub rhs: f64,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn lhs(&self) -> f64 {
        self.lhs1.max(self.lhs2)
    }
}

/// Solvability on a compact surface of area `area`:
/// `max{|a22 ΔN1 − a12 ΔN2|, |a11 ΔN2 − a21 ΔN1|} < det·area/(4π)`.
pub fn check_torus_feasibility(cm: &CouplingMatrix, vc: &VortexConfiguration, area: f64) -> FeasibilityReport {
    let (dn1, dn2) = vc.counts().net();
    let lhs1 = (cm.a22 * dn1 - cm.a12 * dn2).abs();
    let lhs2 = (cm.a11 * dn2 - cm.a21 * dn1).abs();
    let rhs = cm.det() * area / (4.0 * PI);
    FeasibilityReport { lhs1, lhs2, rhs, feasible: lhs1.max(lhs2) < rhs }
}

/// Exponential decay constants of a planar solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    /// Smaller eigenvalue of the symmetrized matrix `Ã`.
    pub lambda1: f64,
    /// `λ₁·min{1, a21/a12}`; `u₁² + u₂²` decays at least like `exp(−√λ₀ r)`.
    pub lambda0: f64,
    /// Physical-couplings constant `σ`, present only when `(a,b,c,d)` are known.
    pub sigma: Option<f64>,
    /// Smallest eigenvalue of `A` itself.
    pub mode_eigenvalue: f64,
}

impl DecayRates {
    /// Decay rate of `|u|` from the linearized far-field system `Δu = (A/2) u`.
    pub fn linearized_field_rate(&self) -> f64 {
        (0.5 * self.mode_eigenvalue).sqrt()
    }

    /// Decay rate of `u₁² + ρ u₂²` from the same linearization.
    pub fn linearized_squared_rate(&self) -> f64 {
        2.0 * self.linearized_field_rate()
    }
}

pub fn decay_rates(cm: &CouplingMatrix, pc: Option<&PhysicalCouplings>) -> DecayRates {
    let rho = cm.symmetrizer();
    let s = cm.a11 + rho * cm.a22;
    let disc = (s * s - 4.0 * rho * cm.det()).max(0.0).sqrt();
    // 4ρ·det / (s + disc) equals ½(s − disc) without the cancellation.
    let lambda1 = 2.0 * rho * cm.det() / (s + disc);
    let lambda0 = if cm.is_decoupled() { lambda1 } else { lambda1 * (cm.a21 / cm.a12).min(1.0) };
    let sigma = pc.map(|pc| {
        let q = pc.a * pc.a + pc.b * pc.b + pc.c * pc.c + pc.d * pc.d;
        let det = pc.determinant();
        let inner = (q * q - 4.0 * det * det).max(0.0).sqrt();
        // 8(q − inner) = 32 det² / (q + inner)
        (32.0 * det * det / (q + inner)).sqrt()
    });
    DecayRates { lambda1, lambda0, sigma, mode_eigenvalue: cm.eigenvalues()[0] }
}

/// Unit eigenvector of `Ã` for its smaller eigenvalue `λ₁`.
pub fn symmetrized_eigenvector(cm: &CouplingMatrix, lambda1: f64) -> [f64; 2] {
    let m = cm.symmetrized();
    // (m00 − λ) x + m01 y = 0; pick the better-conditioned row.
    let (x, y) = if (m[0][0] - lambda1).abs() + m[0][1].abs() >= (m[1][1] - lambda1).abs() + m[1][0].abs() {
        (m[0][1], lambda1 - m[0][0])
    } else {
        (lambda1 - m[1][1], m[1][0])
    };
    let (x, y) = if x == 0.0 && y == 0.0 { (1.0, 0.0) } else { (x, y) };
    let n = x.hypot(y);
    [x / n, y / n]
}

/// Closed-form values of the quantized integrals and related observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxPrediction {
    /// Predicted `∫ τ(u₁)`.
    pub t1: f64,
    /// Predicted `∫ τ(u₂)`.
    pub t2: f64,
    /// `(1/2π)∫F̂`, `(1/2π)∫F̃` on the upper branch.
    pub chern: Option<[f64; 2]>,
    /// `∫B₁`, `∫B₂` on the upper branch.
    pub charge: Option<[f64; 2]>,
    /// `4π(N1 + N2 + P1 + P2)`.
    pub energy: f64,
}

impl FluxPrediction {
    /// Orients the curvature and charge predictions for `sign`; on the lower
    /// branch a zero carries winding `−1`.
    pub fn oriented(self, sign: Sign) -> Self {
        let f = sign.factor();
        Self {
            chern: self.chern.map(|[x, y]| [f * x, f * y]),
            charge: self.charge.map(|[x, y]| [f * x, f * y]),
            ..self
        }
    }
}

pub fn predicted_fluxes(
    cm: &CouplingMatrix,
    vc: &VortexConfiguration,
    pc: Option<&PhysicalCouplings>,
) -> FluxPrediction {
    predicted_fluxes_for_counts(cm, vc.counts(), pc)
}

pub fn predicted_fluxes_for_counts(
    cm: &CouplingMatrix,
    counts: VortexCounts,
    pc: Option<&PhysicalCouplings>,
) -> FluxPrediction {
    let (dn1, dn2) = counts.net();
    let scale = 4.0 * PI / cm.det();
    let t1 = scale * (cm.a22 * -dn1 - cm.a12 * -dn2);
    let t2 = scale * (cm.a11 * -dn2 - cm.a21 * -dn1);
    let (chern, charge) = match pc {
        Some(pc) => {
            let PhysicalCouplings { a, b, c, d } = *pc;
            let det = pc.determinant();
            let chern = [(d * dn1 - b * dn2) / det, (a * dn2 - c * dn1) / det];
            let charge = [
                2.0 * PI * ((c * c + d * d) * dn1 - (a * c + b * d) * dn2) / det,
                2.0 * PI * ((a * a + b * b) * dn2 - (a * c + b * d) * dn1) / det,
            ];
            (Some(chern), Some(charge))
        }
        None => (None, None),
    };
    FluxPrediction { t1, t2, chern, charge, energy: 4.0 * PI * counts.total() as f64 }
}
