//! Variational solver for the regular parts `v = u − u₀`.
//!
//! The system `Δvᵢ = aᵢ₁ τ(u₁) + aᵢ₂ τ(u₂) + fᵢ` is the Euler–Lagrange system
//! of the strictly convex functional
//!
//! ```text
//! J(v) = ½ Σ Wᵢⱼ ∫∇vᵢ·∇vⱼ + det ∫Λ(u₁) + ρ det ∫Λ(u₂) + ∫f̃₁ v₁ + ρ ∫f̃₂ v₂
//! ```
//!
//! with `ρ = a12/a21`, `W = [[a22, −a12], [−a12, ρ a11]]`, `Λ(w) = 2 ln cosh(w/2)`,
//! `f̃₁ = a22 f₁ − a12 f₂`, `f̃₂ = a11 f₂ − a21 f₁`. Its gradient is `−W·R`
//! where `R` is the residual of the system. The minimizer is found by damped
//! Newton; each Newton system is solved by conjugate gradients preconditioned
//! with the exact inverse of the constant-coefficient part in the domain's
//! spectral basis.

use std::fmt;

use num_complex::Complex64;

use crate::background::{background_for, BackgroundData};
use crate::discretization::{sup_norm, DomainSpec, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::model::{check_torus_feasibility, tau, tau_prime, CouplingMatrix, FeasibilityReport, VortexConfiguration};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on the sup-norm of the residual.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Run torus problems that violate the solvability bound.
    pub force: bool,
    /// Sup-norm cap on a single Newton direction.
    pub max_step: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub backtrack: f64,
    pub max_halvings: usize,
    /// Relative tolerance of the inner conjugate-gradient solve.
    pub linear_tol: f64,
    pub max_linear_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_iter: 50,
            force: false,
            max_step: 50.0,
            armijo: 1e-4,
            backtrack: 0.5,
            max_halvings: 30,
            linear_tol: 1e-12,
            max_linear_iter: 200,
        }
    }
}

/// A fully assembled problem: couplings, vortex data, grid and background.
#[derive(Clone)]
pub struct Problem {
    cm: CouplingMatrix,
    vc: VortexConfiguration,
    background: BackgroundData,
    options: SolverOptions,
    grid: Grid,
    feasibility: Option<FeasibilityReport>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("cm", &self.cm)
            .field("vc", &self.vc)
            .field("domain", self.grid.domain())
            .field("lambda", &self.background.lambda)
            .field("options", &self.options)
            .finish()
    }
}

impl Problem {
    pub fn new(
        cm: CouplingMatrix,
        vc: VortexConfiguration,
        background: BackgroundData,
        options: SolverOptions,
    ) -> Result<Self> {
        let domain = *background.domain();
        let feasibility = domain.is_torus().then(|| check_torus_feasibility(&cm, &vc, domain.area()));
        if let Some(rep) = feasibility {
            if !rep.feasible && !options.force {
                return Err(Error::Infeasible { lhs: rep.lhs(), rhs: rep.rhs });
            }
        }
        Ok(Self { cm, vc, background, options, grid: Grid::new(domain), feasibility })
    }

    /// Builds the background for `domain` and assembles the problem.
    pub fn build(
        cm: CouplingMatrix,
        vc: VortexConfiguration,
        domain: DomainSpec,
        lambda: f64,
        copies: usize,
        options: SolverOptions,
    ) -> Result<Self> {
        let bd = background_for(&vc, lambda, copies, domain)?;
        Self::new(cm, vc, bd, options)
    }

    pub fn couplings(&self) -> &CouplingMatrix {
        &self.cm
    }

    pub fn vortices(&self) -> &VortexConfiguration {
        &self.vc
    }

    pub fn background(&self) -> &BackgroundData {
        &self.background
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn domain(&self) -> &DomainSpec {
        self.grid.domain()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn feasibility(&self) -> Option<FeasibilityReport> {
        self.feasibility
    }
}

/// Why the Newton iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No acceptable step along the Newton direction.
    LineSearchStall,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub j_value: f64,
    pub residual_sup: f64,
    pub mean_v1: f64,
    pub mean_v2: f64,
    /// Accepted step length (0 before the first step).
    pub step: f64,
    pub linear_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub v1: ScalarField,
    pub v2: ScalarField,
    pub u1: ScalarField,
    pub u2: ScalarField,
    pub residual_sup: f64,
    pub iterations: usize,
    pub j_value: f64,
    pub converged: bool,
    pub termination: Termination,
    pub history: Vec<IterationRecord>,
}

impl Solution {
    /// `u ↦ −u`, `v ↦ −v`. A solve of the zero/pole-swapped configuration,
    /// negated, is the lower-branch solution of the original one.
    pub fn negated(&self) -> Solution {
        let neg = |f: &ScalarField| f.map(|v| -v);
        Solution {
            v1: neg(&self.v1),
            v2: neg(&self.v2),
            u1: neg(&self.u1),
            u2: neg(&self.u2),
            history: self.history.clone(),
            ..*self
        }
    }
}

/// `Λ(w) = ln((eʷ + e⁻ʷ + 2)/4) = 2 ln cosh(w/2)`.
#[inline]
pub fn log_cosh_potential(w: f64) -> f64 {
    let a = w.abs();
    a + 2.0 * (-a).exp().ln_1p() - 2.0 * std::f64::consts::LN_2
}

/// Coefficients of the functional, precomputed per problem.
struct Weights {
    w11: f64,
    w12: f64,
    w22: f64,
    c1: f64,
    c2: f64,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl Weights {
    fn new(p: &Problem) -> Self {
        let cm = &p.cm;
        let rho = cm.symmetrizer();
        let det = cm.det();
        let (f1, f2) = (p.background.f1.values(), p.background.f2.values());
        let g1 = f1.iter().zip(f2).map(|(a, b)| cm.a22() * a - cm.a12() * b).collect();
        let g2 = f1.iter().zip(f2).map(|(a, b)| rho * (cm.a11() * b - cm.a21() * a)).collect();
        Self { w11: cm.a22(), w12: -cm.a12(), w22: rho * cm.a11(), c1: det, c2: rho * det, g1, g2 }
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn check_shape(p: &Problem, f: &ScalarField) -> Result<()> {
    if f.domain() != p.domain() {
        return Err(Error::InvalidDomain(format!("field lives on {} but the problem on {}", f.domain(), p.domain())));
    }
    Ok(())
}

struct Evaluator<'a> {
    p: &'a Problem,
    w: Weights,
}

impl<'a> Evaluator<'a> {
    fn new(p: &'a Problem) -> Self {
        Self { p, w: Weights::new(p) }
    }

    fn u(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (add(self.p.background.u01.values(), v1), add(self.p.background.u02.values(), v2))
    }

    fn functional(&self, v1: &[f64], v2: &[f64]) -> f64 {
        let grid = &self.p.grid;
        let (l1, l2) = (grid.laplacian_values(v1), grid.laplacian_values(v2));
        let w = &self.w;
        let quad =
            -0.5 * (w.w11 * grid.inner(v1, &l1) + 2.0 * w.w12 * grid.inner(v1, &l2) + w.w22 * grid.inner(v2, &l2));
        let (u1, u2) = self.u(v1, v2);
        let pot: f64 =
            u1.iter().zip(&u2).map(|(&a, &b)| w.c1 * log_cosh_potential(a) + w.c2 * log_cosh_potential(b)).sum::<f64>()
                * self.p.domain().cell_area();
        let lin = grid.inner(&w.g1, v1) + grid.inner(&w.g2, v2);
        quad + pot + lin
    }

    fn residual(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let grid = &self.p.grid;
        let [[a11, a12], [a21, a22]] = self.p.cm.entries();
        let (u1, u2) = self.u(v1, v2);
        let (mut r1, mut r2) = (grid.laplacian_values(v1), grid.laplacian_values(v2));
        let (f1, f2) = (self.p.background.f1.values(), self.p.background.f2.values());
        for k in 0..r1.len() {
            let (t1, t2) = (tau(u1[k]), tau(u2[k]));
            r1[k] -= a11 * t1 + a12 * t2 + f1[k];
            r2[k] -= a21 * t1 + a22 * t2 + f2[k];
        }
        (r1, r2)
    }

    fn gradient(&self, v1: &[f64], v2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let grid = &self.p.grid;
        let w = &self.w;
        let (l1, l2) = (grid.laplacian_values(v1), grid.laplacian_values(v2));
        let (u1, u2) = self.u(v1, v2);
        let n = v1.len();
        let mut g1 = Vec::with_capacity(n);
        let mut g2 = Vec::with_capacity(n);
        for k in 0..n {
            g1.push(-(w.w11 * l1[k] + w.w12 * l2[k]) + w.c1 * tau(u1[k]) + w.g1[k]);
            g2.push(-(w.w12 * l1[k] + w.w22 * l2[k]) + w.c2 * tau(u2[k]) + w.g2[k]);
        }
        (g1, g2)
    }

    /// Diagonal of the Hessian's nonlinear part at `u`.
    fn curvature(&self, u1: &[f64], u2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (u1.iter().map(|&u| self.w.c1 * tau_prime(u)).collect(), u2.iter().map(|&u| self.w.c2 * tau_prime(u)).collect())
    }

    fn hessian_apply(&self, d: &(Vec<f64>, Vec<f64>), x1: &[f64], x2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let grid = &self.p.grid;
        let w = &self.w;
        let (l1, l2) = (grid.laplacian_values(x1), grid.laplacian_values(x2));
        let n = x1.len();
        let mut y1 = Vec::with_capacity(n);
        let mut y2 = Vec::with_capacity(n);
        for k in 0..n {
            y1.push(-(w.w11 * l1[k] + w.w12 * l2[k]) + d.0[k] * x1[k]);
            y2.push(-(w.w12 * l1[k] + w.w22 * l2[k]) + d.1[k] * x2[k]);
        }
        (y1, y2)
    }
}

/// Exact inverse of `W⊗(−Δ) + diag(d̄₁, d̄₂)` in the spectral basis.
struct Preconditioner<'a> {
    grid: &'a Grid,
    w: [f64; 3],
    d: [f64; 2],
}

impl Preconditioner<'_> {
    fn apply(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let sp = self.grid.spectral();
        let mut h1 = sp.forward(r1);
        let mut h2 = sp.forward(r2);
        let [w11, w12, w22] = self.w;
        for ((a, b), &mu) in h1.iter_mut().zip(h2.iter_mut()).zip(sp.symbol()) {
            let m11 = w11 * mu + self.d[0];
            let m12 = w12 * mu;
            let m22 = w22 * mu + self.d[1];
            let det = m11 * m22 - m12 * m12;
            let (x, y): (Complex64, Complex64) = (*a, *b);
            *a = (x * m22 - y * m12) / det;
            *b = (y * m11 - x * m12) / det;
        }
        (sp.inverse(h1), sp.inverse(h2))
    }
}

pub fn evaluate_functional(problem: &Problem, v1: &ScalarField, v2: &ScalarField) -> Result<f64> {
    check_shape(problem, v1)?;
    check_shape(problem, v2)?;
    Ok(Evaluator::new(problem).functional(v1.values(), v2.values()))
}

/// Pointwise residuals `Δvᵢ − aᵢ₁ τ(u₁) − aᵢ₂ τ(u₂) − fᵢ`.
pub fn residual(problem: &Problem, v1: &ScalarField, v2: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    check_shape(problem, v1)?;
    check_shape(problem, v2)?;
    let (r1, r2) = Evaluator::new(problem).residual(v1.values(), v2.values());
    let d = *problem.domain();
    Ok((ScalarField::from_raw(d, r1), ScalarField::from_raw(d, r2)))
}

/// Gradient of [`evaluate_functional`] with respect to the inner product
/// `h₁h₂ Σ a·b`, assembled directly from the functional's terms.
pub fn gradient(problem: &Problem, v1: &ScalarField, v2: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    check_shape(problem, v1)?;
    check_shape(problem, v2)?;
    let (g1, g2) = Evaluator::new(problem).gradient(v1.values(), v2.values());
    let d = *problem.domain();
    Ok((ScalarField::from_raw(d, g1), ScalarField::from_raw(d, g2)))
}

pub fn solve(problem: &Problem) -> Solution {
    let d = *problem.domain();
    newton(problem, vec![0.0; d.len()], vec![0.0; d.len()])
}

/// Newton iteration started from `(v1, v2)` instead of zero.
pub fn solve_from(problem: &Problem, v1: &ScalarField, v2: &ScalarField) -> Result<Solution> {
    check_shape(problem, v1)?;
    check_shape(problem, v2)?;
    Ok(newton(problem, v1.values().to_vec(), v2.values().to_vec()))
}

struct Cg {
    x: (Vec<f64>, Vec<f64>),
    iterations: usize,
}

/// Preconditioned CG for `H x = b`.
fn pcg(ev: &Evaluator, curv: &(Vec<f64>, Vec<f64>), pre: &Preconditioner, b1: &[f64], b2: &[f64]) -> Cg {
    let opts = &ev.p.options;
    let n = b1.len();
    let dot = |a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)| {
        a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum::<f64>() + a.1.iter().zip(&b.1).map(|(x, y)| x * y).sum::<f64>()
    };
    let mut x = (vec![0.0; n], vec![0.0; n]);
    let mut r = (b1.to_vec(), b2.to_vec());
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return Cg { x, iterations: 0 };
    }
    let mut z = pre.apply(&r.0, &r.1);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    while it < opts.max_linear_iter {
        it += 1;
        let hp = ev.hessian_apply(curv, &p.0, &p.1);
        let php = dot(&p, &hp);
        if php.is_nan() || php <= 0.0 {
            break;
        }
        let alpha = rz / php;
        axpy(alpha, &p.0, &mut x.0);
        axpy(alpha, &p.1, &mut x.1);
        axpy(-alpha, &hp.0, &mut r.0);
        axpy(-alpha, &hp.1, &mut r.1);
        if dot(&r, &r).sqrt() <= opts.linear_tol * bnorm {
            break;
        }
        z = pre.apply(&r.0, &r.1);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pk, zk) in p.0.iter_mut().zip(&z.0) {
            *pk = zk + beta * *pk;
        }
        for (pk, zk) in p.1.iter_mut().zip(&z.1) {
            *pk = zk + beta * *pk;
        }
    }
    Cg { x, iterations: it }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn newton(problem: &Problem, mut v1: Vec<f64>, mut v2: Vec<f64>) -> Solution {
    let ev = Evaluator::new(problem);
    let opts = problem.options;
    let area = problem.domain().cell_area();

    let mut history = Vec::new();
    let mut j = ev.functional(&v1, &v2);
    let (mut r1, mut r2) = ev.residual(&v1, &v2);
    let mut res = sup_norm(&r1).max(sup_norm(&r2));
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    history.push(IterationRecord {
        iteration: 0,
        j_value: j,
        residual_sup: res,
        mean_v1: mean(&v1),
        mean_v2: mean(&v2),
        step: 0.0,
        linear_iterations: 0,
    });

    loop {
        if !(res.is_finite() && j.is_finite()) {
            termination = Termination::NonFinite;
            break;
        }
        if res <= opts.tol_residual {
            termination = Termination::Converged;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let (g1, g2) = ev.gradient(&v1, &v2);
        let (u1, u2) = ev.u(&v1, &v2);
        let curv = ev.curvature(&u1, &u2);
        let floor = |c: f64, v: &[f64]| mean(v).max(1e-10 * c);
        let pre = Preconditioner {
            grid: problem.grid(),
            w: [ev.w.w11, ev.w.w12, ev.w.w22],
            d: [floor(ev.w.c1, &curv.0), floor(ev.w.c2, &curv.1)],
        };
        let neg_g1: Vec<f64> = g1.iter().map(|g| -g).collect();
        let neg_g2: Vec<f64> = g2.iter().map(|g| -g).collect();
        let cg = pcg(&ev, &curv, &pre, &neg_g1, &neg_g2);
        let (mut d1, mut d2) = cg.x;

        let mut slope = area
            * (g1.iter().zip(&d1).map(|(a, b)| a * b).sum::<f64>()
                + g2.iter().zip(&d2).map(|(a, b)| a * b).sum::<f64>());
        if !slope.is_finite() || slope >= 0.0 {
            // fall back to the preconditioned gradient
            let (p1, p2) = pre.apply(&neg_g1, &neg_g2);
            d1 = p1;
            d2 = p2;
            slope = area
                * (g1.iter().zip(&d1).map(|(a, b)| a * b).sum::<f64>()
                    + g2.iter().zip(&d2).map(|(a, b)| a * b).sum::<f64>());
        }
        let size = sup_norm(&d1).max(sup_norm(&d2));
        if !size.is_finite() || slope.is_nan() || slope >= 0.0 {
            termination = Termination::NonFinite;
            break;
        }
        if size > opts.max_step {
            let s = opts.max_step / size;
            d1.iter_mut().for_each(|x| *x *= s);
            d2.iter_mut().for_each(|x| *x *= s);
            slope *= s;
        }

        // J change below rounding: accept on residual decrease
        let noise = 1e-12 * (1.0 + j.abs());
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let t1: Vec<f64> = v1.iter().zip(&d1).map(|(v, d)| v + alpha * d).collect();
            let t2: Vec<f64> = v2.iter().zip(&d2).map(|(v, d)| v + alpha * d).collect();
            let jt = ev.functional(&t1, &t2);
            if jt.is_finite() && jt <= j + opts.armijo * alpha * slope {
                accepted = Some((t1, t2, jt));
                break;
            }
            if jt.is_finite() && (alpha * slope).abs() < noise {
                let (s1, s2) = ev.residual(&t1, &t2);
                if sup_norm(&s1).max(sup_norm(&s2)) < res {
                    accepted = Some((t1, t2, jt.min(j)));
                    break;
                }
            }
            alpha *= opts.backtrack;
        }
        let Some((t1, t2, jt)) = accepted else {
            termination = Termination::LineSearchStall;
            break;
        };
        v1 = t1;
        v2 = t2;
        j = jt;
        (r1, r2) = ev.residual(&v1, &v2);
        res = sup_norm(&r1).max(sup_norm(&r2));
        log::debug!("newton {iterations}: J = {j:.12e}, residual = {res:.3e}, step = {alpha}, cg = {}", cg.iterations);
        history.push(IterationRecord {
            iteration: iterations,
            j_value: j,
            residual_sup: res,
            mean_v1: mean(&v1),
            mean_v2: mean(&v2),
            step: alpha,
            linear_iterations: cg.iterations,
        });
    }

    let d = *problem.domain();
    let (u1, u2) = ev.u(&v1, &v2);
    Solution {
        v1: ScalarField::from_raw(d, v1),
        v2: ScalarField::from_raw(d, v2),
        u1: ScalarField::from_raw(d, u1),
        u2: ScalarField::from_raw(d, u2),
        residual_sup: res,
        iterations,
        j_value: j,
        converged: termination == Termination::Converged,
        termination,
        history,
    }
}
