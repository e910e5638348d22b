//! Radially symmetric reference solver for vortices stacked at one point.
//!
//! With all zeros and poles at the origin the solution is radial,
//! `uᵢ(r) = nᵢ ln(r²/(1+r²)) + wᵢ(r)`, and the regular parts solve
//! `wᵢ″ + wᵢ′/r = aᵢ₁ τ(u₁) + aᵢ₂ τ(u₂) + 4nᵢ/(1+r²)²` with `wᵢ′(0) = 0`.
//! Unlike `uᵢ − 2nᵢ ln r`, these stay bounded and decay. At `r = R` each
//! eigencomponent of the linearized far field `Δu = (A/2)u` is matched to its
//! decaying Bessel profile `K₀(κr)`.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use crate::discretization::{DomainSpec, ScalarField};
use crate::error::{Error, Result};
use crate::model::{tau, tau_prime, CouplingMatrix, VortexConfiguration};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProblem {
    pub cm: CouplingMatrix,
    /// Net multiplicity at the origin per species (zeros positive).
    pub n1: i64,
    pub n2: i64,
    pub radius: f64,
    pub nodes: usize,
}

impl RadialProblem {
    pub const MIN_NODES: usize = 1000;
    pub const DEFAULT_RADIUS: f64 = 20.0;
    pub const DEFAULT_NODES: usize = 4000;

    pub fn new(cm: CouplingMatrix, n1: i64, n2: i64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidDomain(format!("radial extent must be positive, got {radius}")));
        }
        if nodes < Self::MIN_NODES {
            return Err(Error::InvalidDomain(format!(
                "radial mesh needs at least {} nodes, got {nodes}",
                Self::MIN_NODES
            )));
        }
        Ok(Self { cm, n1, n2, radius, nodes })
    }

    /// Reads the net multiplicities from a configuration whose points all
    /// coincide; returns them with the common point.
    pub fn from_configuration(
        cm: CouplingMatrix,
        vc: &VortexConfiguration,
        radius: f64,
        nodes: usize,
    ) -> Result<(Self, (f64, f64))> {
        vc.validate()?;
        let mut center: Option<(f64, f64)> = None;
        for (_, _, v) in vc.points() {
            match center {
                None => center = Some((v.x, v.y)),
                Some((x, y)) if x == v.x && y == v.y => {}
                Some((x, y)) => {
                    return Err(Error::InvalidConfiguration(format!(
                        "radial reference needs coincident points, found ({x}, {y}) and ({}, {})",
                        v.x, v.y
                    )))
                }
            }
        }
        let c = vc.counts();
        let rp = Self::new(cm, c.n1 - c.p1, c.n2 - c.p2, radius, nodes)?;
        Ok((rp, center.unwrap_or((0.0, 0.0))))
    }

    pub fn spacing(&self) -> f64 {
        self.radius / (self.nodes - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub n1: i64,
    pub n2: i64,
    pub r: Vec<f64>,
    /// Regular parts `wᵢ = uᵢ − nᵢ ln(r²/(1+r²))`.
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub residual_sup: f64,
    pub iterations: usize,
}

/// `n ln(r²/(1+r²))`.
fn singular(n: i64, r: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        -(n as f64) * (1.0 / (r * r)).ln_1p()
    }
}

/// `Δ` of [`singular`] away from the origin.
fn core_source(n: i64, r: f64) -> f64 {
    let q = 1.0 + r * r;
    4.0 * n as f64 / (q * q)
}

impl RadialSolution {
    fn profile(&self, n: i64, w: &[f64]) -> Vec<f64> {
        self.r.iter().zip(w).map(|(&r, &w)| singular(n, r) + w).collect()
    }

    /// `u₁` at the mesh nodes (`−∞`/`+∞` at the origin for a zero/pole).
    pub fn u1(&self) -> Vec<f64> {
        self.profile(self.n1, &self.w1)
    }

    pub fn u2(&self) -> Vec<f64> {
        self.profile(self.n2, &self.w2)
    }

    /// `(u₁(r), u₂(r))` by linear interpolation of the regular parts.
    /// Radii beyond the mesh are clamped to its end.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let dr = self.r[1];
        let last = self.r.len() - 1;
        let s = (r / dr).clamp(0.0, last as f64);
        let k = (s.floor() as usize).min(last - 1);
        let t = s - k as f64;
        let lerp = |w: &[f64]| (1.0 - t) * w[k] + t * w[k + 1];
        (singular(self.n1, r) + lerp(&self.w1), singular(self.n2, r) + lerp(&self.w2))
    }

    /// `2π ∫₀^R τ(uᵢ) r dr` by the trapezoidal rule.
    pub fn fluxes(&self) -> [f64; 2] {
        let dr = self.r[1];
        let (u1, u2) = (self.u1(), self.u2());
        let quad = |u: &[f64]| {
            let last = u.len() - 1;
            let s: f64 = (1..last).map(|k| tau(u[k]) * self.r[k]).sum();
            2.0 * std::f64::consts::PI * dr * (s + 0.5 * tau(u[last]) * self.r[last])
        };
        [quad(&u1), quad(&u2)]
    }

    /// Three-column text `r u1 u2`, one node per line.
    pub fn to_table(&self) -> String {
        let (u1, u2) = (self.u1(), self.u2());
        let mut out = String::from("# r u1 u2\n");
        for k in 0..self.r.len() {
            let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", self.r[k], u1[k], u2[k]);
        }
        out
    }
}

/// Largest `|u_2D(node) − u_radial(|node − center|)|` over nodes with
/// `r_lo ≤ |node − center| ≤ r_hi`, both species.
pub fn compare_with_plane(
    rs: &RadialSolution,
    u1: &ScalarField,
    u2: &ScalarField,
    center: (f64, f64),
    r_lo: f64,
    r_hi: f64,
) -> Result<f64> {
    let domain = *u1.domain();
    if !matches!(domain, DomainSpec::Plane { .. }) {
        return Err(Error::WrongDomain("plane"));
    }
    if u2.domain() != &domain {
        return Err(Error::ShapeMismatch { expected: domain.len(), got: u2.values().len() });
    }
    let (nx, ny) = domain.shape();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = domain.node(i, j);
            let r = (x - center.0).hypot(y - center.1);
            if r < r_lo || r > r_hi {
                continue;
            }
            let (a, b) = rs.eval(r);
            worst = worst.max((u1.get(i, j) - a).abs()).max((u2.get(i, j) - b).abs());
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidWindow(format!("no nodes with {r_lo} <= r <= {r_hi}")));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mat2([[f64; 2]; 2]);

impl Mat2 {
    const ZERO: Self = Self([[0.0; 2]; 2]);

    fn scalar(s: f64) -> Self {
        Self([[s, 0.0], [0.0, s]])
    }

    fn inverse(self) -> Self {
        let [[a, b], [c, d]] = self.0;
        let det = a * d - b * c;
        Self([[d / det, -b / det], [-c / det, a / det]])
    }

    fn apply(self, v: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.0;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }
}

impl Add for Mat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }
}

impl Sub for Mat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o * -1.0
    }
}

impl Mul for Mat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Self([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }
}

impl Mul<f64> for Mat2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        let a = self.0;
        Self([[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]])
    }
}

/// `e^z K_ν(z)` from `∫₀^∞ exp(−z(cosh t − 1)) cosh(νt) dt`.
pub fn scaled_bessel_k(nu: f64, z: f64) -> f64 {
    let h = 0.02f64;
    let mut sum = 0.5f64;
    let mut t = h;
    loop {
        let term = (-z * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        t += h;
    }
    sum * h
}

/// Outer Robin matrix `M` with `u′(R) = −M u(R)` for decaying solutions of
/// `Δu = (A/2)u`.
fn robin_matrix(cm: &CouplingMatrix, radius: f64) -> Mat2 {
    let [m1, m2] = cm.eigenvalues();
    let g = |mu: f64| {
        let kappa = (0.5 * mu).sqrt();
        let z = kappa * radius;
        kappa * scaled_bessel_k(1.0, z) / scaled_bessel_k(0.0, z)
    };
    let a = Mat2(cm.entries());
    if (m2 - m1).abs() <= 1e-12 * m2.abs() {
        return Mat2::scalar(g(0.5 * (m1 + m2)));
    }
    // spectral projectors of A
    let p1 = (a - Mat2::scalar(m2)) * (1.0 / (m1 - m2));
    let p2 = (a - Mat2::scalar(m1)) * (1.0 / (m2 - m1));
    p1 * g(m1) + p2 * g(m2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOptions {
    pub tol_residual: f64,
    pub max_iter: usize,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { tol_residual: 1e-10, max_iter: 60 }
    }
}

struct System {
    a: Mat2,
    n: [i64; 2],
    r: Vec<f64>,
    dr: f64,
    robin: Mat2,
}

impl System {
    fn u(&self, k: usize, w: &[[f64; 2]]) -> [f64; 2] {
        let r = self.r[k];
        let at = |i: usize| {
            if k == 0 && self.n[i] != 0 {
                // only τ(u(0)) = ∓1 is ever needed
                -(self.n[i].signum() as f64) * f64::INFINITY
            } else {
                singular(self.n[i], r) + w[k][i]
            }
        };
        [at(0), at(1)]
    }

    fn forcing(&self, u: [f64; 2]) -> ([f64; 2], Mat2) {
        let t = [tau(u[0]), tau(u[1])];
        let dt = [tau_prime(u[0]), tau_prime(u[1])];
        let [[a11, a12], [a21, a22]] = self.a.0;
        (
            [a11 * t[0] + a12 * t[1], a21 * t[0] + a22 * t[1]],
            Mat2([[a11 * dt[0], a12 * dt[1]], [a21 * dt[0], a22 * dt[1]]]),
        )
    }

    /// Residual rows and the block-tridiagonal Jacobian `(L, D, U)`.
    fn assemble(&self, w: &[[f64; 2]]) -> (Vec<[f64; 2]>, Vec<Mat2>, Vec<Mat2>, Vec<Mat2>) {
        let n = w.len();
        let dr = self.dr;
        let inv2 = 1.0 / (dr * dr);
        let mut res = vec![[0.0; 2]; n];
        let mut lo = vec![Mat2::ZERO; n];
        let mut di = vec![Mat2::ZERO; n];
        let mut up = vec![Mat2::ZERO; n];
        for k in 0..n {
            let (f, jf) = self.forcing(self.u(k, w));
            if k == 0 {
                for i in 0..2 {
                    res[0][i] = 4.0 * (w[1][i] - w[0][i]) * inv2 - f[i] - core_source(self.n[i], 0.0);
                }
                di[0] = Mat2::scalar(-4.0 * inv2) - jf;
                up[0] = Mat2::scalar(4.0 * inv2);
            } else if k + 1 < n {
                let r = self.r[k];
                let (cl, cu) = (inv2 - 0.5 / (r * dr), inv2 + 0.5 / (r * dr));
                for i in 0..2 {
                    res[k][i] =
                        cl * w[k - 1][i] - 2.0 * inv2 * w[k][i] + cu * w[k + 1][i] - f[i] - core_source(self.n[i], r);
                }
                lo[k] = Mat2::scalar(cl);
                di[k] = Mat2::scalar(-2.0 * inv2) - jf;
                up[k] = Mat2::scalar(cu);
            } else {
                let r = self.r[k];
                let (cl, cu) = (inv2 - 0.5 / (r * dr), inv2 + 0.5 / (r * dr));
                let u = self.u(k, w);
                let mu = self.robin.apply(u);
                // u′ = w′ + 2n/(r(1+r²)) = −M u
                let ghost: [f64; 2] = std::array::from_fn(|i| {
                    w[k - 1][i] - 2.0 * dr * (2.0 * self.n[i] as f64 / (r * (1.0 + r * r)) + mu[i])
                });
                for i in 0..2 {
                    res[k][i] =
                        cl * w[k - 1][i] - 2.0 * inv2 * w[k][i] + cu * ghost[i] - f[i] - core_source(self.n[i], r);
                }
                lo[k] = Mat2::scalar(cl + cu);
                di[k] = Mat2::scalar(-2.0 * inv2) + self.robin * (-2.0 * dr * cu) - jf;
            }
        }
        (res, lo, di, up)
    }
}

/// Block Thomas elimination.
fn block_thomas(lo: &[Mat2], di: &[Mat2], up: &[Mat2], rhs: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = rhs.len();
    let mut c = vec![Mat2::ZERO; n];
    let mut d = vec![[0.0; 2]; n];
    let inv = di[0].inverse();
    c[0] = inv * up[0];
    d[0] = inv.apply(rhs[0]);
    for k in 1..n {
        let m = (di[k] - lo[k] * c[k - 1]).inverse();
        c[k] = m * up[k];
        let l = lo[k].apply(d[k - 1]);
        d[k] = m.apply([rhs[k][0] - l[0], rhs[k][1] - l[1]]);
    }
    let mut x = vec![[0.0; 2]; n];
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        let cx = c[k].apply(x[k + 1]);
        x[k] = [d[k][0] - cx[0], d[k][1] - cx[1]];
    }
    x
}

fn sup(res: &[[f64; 2]]) -> f64 {
    res.iter().fold(0.0, |m, r| m.max(r[0].abs()).max(r[1].abs()))
}

pub fn solve_radial(rp: &RadialProblem) -> Result<RadialSolution> {
    solve_radial_with(rp, RadialOptions::default())
}

pub fn solve_radial_with(rp: &RadialProblem, opts: RadialOptions) -> Result<RadialSolution> {
    let dr = rp.spacing();
    let r: Vec<f64> = (0..rp.nodes).map(|k| k as f64 * dr).collect();
    let sys = System { a: Mat2(rp.cm.entries()), n: [rp.n1, rp.n2], robin: robin_matrix(&rp.cm, rp.radius), dr, r };
    let mut w = vec![[0.0; 2]; rp.nodes];
    let (mut res, mut lo, mut di, mut up) = sys.assemble(&w);
    let mut norm = sup(&res);
    let mut it = 0;
    while norm > opts.tol_residual {
        if it == opts.max_iter || !norm.is_finite() {
            return Err(Error::RadialNonConvergence { residual: norm, iterations: it });
        }
        it += 1;
        let neg: Vec<[f64; 2]> = res.iter().map(|r| [-r[0], -r[1]]).collect();
        let delta = block_thomas(&lo, &di, &up, &neg);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<[f64; 2]> =
                w.iter().zip(&delta).map(|(a, d)| [a[0] + alpha * d[0], a[1] + alpha * d[1]]).collect();
            let next = sys.assemble(&trial);
            let n = sup(&next.0);
            if n < norm || alpha < 1e-6 {
                w = trial;
                (res, lo, di, up) = next;
                norm = n;
                break;
            }
            alpha *= 0.5;
        }
    }
    Ok(RadialSolution {
        n1: rp.n1,
        n2: rp.n2,
        w1: w.iter().map(|x| x[0]).collect(),
        w2: w.iter().map(|x| x[1]).collect(),
        r: sys.r,
        residual_sup: norm,
        iterations: it,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bessel_values() {
        // K0(1) = 0.42102443824070834, K1(1) = 0.6019072301972346
        let e = 1f64.exp();
        assert!((scaled_bessel_k(0.0, 1.0) / e - 0.42102443824070834).abs() < 1e-14);
        assert!((scaled_bessel_k(1.0, 1.0) / e - 0.6019072301972346).abs() < 1e-14);
        // K0(10) = 1.778006231616e-5
        let k0 = scaled_bessel_k(0.0, 10.0) * (-10f64).exp();
        assert!((k0 / 1.778006231616e-5 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn block_thomas_solves_tridiagonal() {
        let n = 6;
        let lo: Vec<Mat2> = (0..n).map(|k| Mat2([[1.0, 0.2], [0.1, 1.0]]) * (k as f64 * 0.1)).collect();
        let di: Vec<Mat2> = (0..n).map(|k| Mat2([[-5.0 - k as f64, 0.3], [0.4, -6.0]])).collect();
        let up: Vec<Mat2> = (0..n).map(|_| Mat2([[1.5, -0.1], [0.0, 2.0]])).collect();
        let x: Vec<[f64; 2]> = (0..n).map(|k| [k as f64 - 2.5, (k as f64).sin()]).collect();
        let mut b = vec![[0.0; 2]; n];
        for k in 0..n {
            let mut acc = di[k].apply(x[k]);
            if k > 0 {
                let l = lo[k].apply(x[k - 1]);
                acc = [acc[0] + l[0], acc[1] + l[1]];
            }
            if k + 1 < n {
                let u = up[k].apply(x[k + 1]);
                acc = [acc[0] + u[0], acc[1] + u[1]];
            }
            b[k] = acc;
        }
        let got = block_thomas(&lo, &di, &up, &b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g[0] - e[0]).abs() < 1e-12 && (g[1] - e[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn robin_matrix_reduces_to_scalar_ratio() {
        let cm = CouplingMatrix::new(4.0, 0.0, 0.0, 2.0).unwrap();
        let m = robin_matrix(&cm, 5.0);
        let g = |mu: f64| {
            let k = (0.5 * mu).sqrt();
            k * scaled_bessel_k(1.0, k * 5.0) / scaled_bessel_k(0.0, k * 5.0)
        };
        assert!((m.0[0][0] - g(4.0)).abs() < 1e-14);
        assert!((m.0[1][1] - g(2.0)).abs() < 1e-14);
        assert_eq!(m.0[0][1], 0.0);
    }

    #[test]
    fn trivial_problem_is_zero() {
        let cm = CouplingMatrix::new(8.0, -4.0, -4.0, 4.0).unwrap();
        let rs = solve_radial(&RadialProblem::new(cm, 0, 0, 20.0, 1000).unwrap()).unwrap();
        assert!(rs.u1().iter().chain(&rs.u2()).all(|&u| u == 0.0));
        assert_eq!(rs.iterations, 0);
    }

    #[test]
    fn decoupled_flux() {
        let cm = CouplingMatrix::new(4.0, 0.0, 0.0, 4.0).unwrap();
        let rs = solve_radial(&RadialProblem::new(cm, 1, 0, 20.0, 4000).unwrap()).unwrap();
        let [t1, t2] = rs.fluxes();
        assert!((t1 + PI).abs() < 0.005 * PI, "{t1}");
        assert!(t2.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_problems() {
        let cm = CouplingMatrix::new(4.0, 0.0, 0.0, 4.0).unwrap();
        assert!(RadialProblem::new(cm, 1, 0, 20.0, 999).is_err());
        assert!(RadialProblem::new(cm, 1, 0, -1.0, 4000).is_err());
        let vc = VortexConfiguration {
            zeros1: vec![crate::model::Vortex::at(0.0, 0.0), crate::model::Vortex::at(0.5, 0.0)],
            ..Default::default()
        };
        assert!(matches!(RadialProblem::from_configuration(cm, &vc, 20.0, 4000), Err(Error::InvalidConfiguration(_))));
    }
}
