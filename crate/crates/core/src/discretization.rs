//! Grids, Laplacians and quadrature for the two supported domains.
//!
//! * `Torus`: periodic `L1 × L2` cell, nodes at `(i·h1, j·h2)`, spectral
//!   Laplacian via Fourier multipliers.
//! * `Plane`: the square `[−R, R]²` with `n` nodes per side including the
//!   edges, 5-point Laplacian with zero values outside the square.
//!
//! Field values are stored row-major with `x` fastest.

use std::fmt;

use crate::error::{Error, Result};
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Torus { l1: f64, l2: f64, n1: usize, n2: usize },
    Plane { half_width: f64, n: usize },
}

impl DomainSpec {
    pub fn torus(l1: f64, l2: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(Error::InvalidDomain(format!("torus sides must be positive, got {l1} x {l2}")));
        }
        if n1 < 2 || n2 < 2 || !n1.is_multiple_of(2) || !n2.is_multiple_of(2) {
            return Err(Error::InvalidDomain(format!("torus node counts must be even and positive, got {n1} x {n2}")));
        }
        Ok(DomainSpec::Torus { l1, l2, n1, n2 })
    }

    pub fn plane(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidDomain(format!("half-width must be positive, got {half_width}")));
        }
        if n < 3 {
            return Err(Error::InvalidDomain(format!("plane grid needs at least 3 nodes per side, got {n}")));
        }
        Ok(DomainSpec::Plane { half_width, n })
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, DomainSpec::Torus { .. })
    }

    /// `(nx, ny)`.
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            DomainSpec::Torus { n1, n2, .. } => (n1, n2),
            DomainSpec::Plane { n, .. } => (n, n),
        }
    }

    pub fn len(&self) -> usize {
        let (nx, ny) = self.shape();
        nx * ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node spacings `(hx, hy)`.
    pub fn spacing(&self) -> (f64, f64) {
        match *self {
            DomainSpec::Torus { l1, l2, n1, n2 } => (l1 / n1 as f64, l2 / n2 as f64),
            DomainSpec::Plane { half_width, n } => {
                let h = 2.0 * half_width / (n - 1) as f64;
                (h, h)
            }
        }
    }

    /// Coordinates of node `(0, 0)`.
    pub fn origin(&self) -> (f64, f64) {
        match *self {
            DomainSpec::Torus { .. } => (0.0, 0.0),
            DomainSpec::Plane { half_width, .. } => (-half_width, -half_width),
        }
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let (x0, y0) = self.origin();
        let (hx, hy) = self.spacing();
        (x0 + i as f64 * hx, y0 + j as f64 * hy)
    }

    pub fn cell_area(&self) -> f64 {
        let (hx, hy) = self.spacing();
        hx * hy
    }

    /// `|S| = L1·L2` for the torus, `(2R)²` for the truncated plane.
    pub fn area(&self) -> f64 {
        match *self {
            DomainSpec::Torus { l1, l2, .. } => l1 * l2,
            DomainSpec::Plane { half_width, .. } => 4.0 * half_width * half_width,
        }
    }

    /// Geometric center of the domain.
    pub fn center(&self) -> (f64, f64) {
        match *self {
            DomainSpec::Torus { l1, l2, .. } => (0.5 * l1, 0.5 * l2),
            DomainSpec::Plane { .. } => (0.0, 0.0),
        }
    }

    /// Torus: `[0, L1) × [0, L2)`; plane: the open square.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            DomainSpec::Torus { l1, l2, .. } => (0.0..l1).contains(&x) && (0.0..l2).contains(&y),
            DomainSpec::Plane { half_width: r, .. } => x.abs() < r && y.abs() < r,
        }
    }

    /// Node that `(x, y)` coincides with, if any (relative tolerance `1e-9` of a cell).
    pub fn coincident_node(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (x0, y0) = self.origin();
        let (hx, hy) = self.spacing();
        let (nx, ny) = self.shape();
        let fi = (x - x0) / hx;
        let fj = (y - y0) / hy;
        let (ri, rj) = (fi.round(), fj.round());
        let tol = 1e-9;
        if (fi - ri).abs() < tol && (fj - rj).abs() < tol {
            let wrap = |r: f64, n: usize| -> Option<usize> {
                let k = r as i64;
                if self.is_torus() {
                    Some(k.rem_euclid(n as i64) as usize)
                } else if (0..n as i64).contains(&k) {
                    Some(k as usize)
                } else {
                    None
                }
            };
            return Some((wrap(ri, nx)?, wrap(rj, ny)?));
        }
        None
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Torus { l1, l2, n1, n2 } => write!(f, "torus {l1} x {l2} on {n1} x {n2} nodes"),
            DomainSpec::Plane { half_width, n } => write!(f, "square [-{half_width}, {half_width}]^2 on {n}^2 nodes"),
        }
    }
}

/// Real values at the nodes of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    domain: DomainSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::ShapeMismatch { expected: domain.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Self { domain, values })
    }

    /// Skips the finiteness check; shape must still match.
    pub(crate) fn from_raw(domain: DomainSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.len());
        Self { domain, values }
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        Self { domain, values: vec![0.0; domain.len()] }
    }

    pub fn constant(domain: DomainSpec, value: f64) -> Self {
        Self { domain, values: vec![value; domain.len()] }
    }

    pub fn from_fn(domain: DomainSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let (nx, ny) = domain.shape();
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = domain.node(i, j);
                values.push(f(x, y));
            }
        }
        Self { domain, values }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.domain.shape().0 + i]
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.domain, other.domain);
        Self::from_raw(self.domain, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Discrete operators on one domain, with cached transform plans.
#[derive(Clone)]
pub struct Grid {
    domain: DomainSpec,
    spectral: Spectral,
}

impl Grid {
    pub fn new(domain: DomainSpec) -> Self {
        let (nx, ny) = domain.shape();
        let spectral = match domain {
            DomainSpec::Torus { l1, l2, .. } => Spectral::periodic(nx, ny, l1, l2),
            DomainSpec::Plane { .. } => {
                let (hx, hy) = domain.spacing();
                Spectral::dirichlet(nx, ny, hx, hy)
            }
        };
        Self { domain, spectral }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub(crate) fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Discrete Laplacian of raw node values.
    pub fn laplacian_values(&self, v: &[f64]) -> Vec<f64> {
        match self.domain {
            DomainSpec::Torus { .. } => self.spectral.apply_symbol(v, |mu| -mu),
            DomainSpec::Plane { .. } => {
                let (nx, ny) = self.domain.shape();
                let (hx, _) = self.domain.spacing();
                let inv_h2 = 1.0 / (hx * hx);
                let mut out = vec![0.0; nx * ny];
                for j in 0..ny {
                    for i in 0..nx {
                        let k = j * nx + i;
                        let w = if i > 0 { v[k - 1] } else { 0.0 };
                        let e = if i + 1 < nx { v[k + 1] } else { 0.0 };
                        let s = if j > 0 { v[k - nx] } else { 0.0 };
                        let n = if j + 1 < ny { v[k + nx] } else { 0.0 };
                        out[k] = (w + e + s + n - 4.0 * v[k]) * inv_h2;
                    }
                }
                out
            }
        }
    }

    pub fn laplacian(&self, field: &ScalarField) -> ScalarField {
        debug_assert_eq!(field.domain, self.domain);
        ScalarField::from_raw(self.domain, self.laplacian_values(&field.values))
    }

    /// Torus: `h1 h2 Σ`; plane: composite trapezoidal rule over the square.
    pub fn integrate_values(&self, v: &[f64]) -> f64 {
        match self.domain {
            DomainSpec::Torus { .. } => self.domain.cell_area() * v.iter().sum::<f64>(),
            DomainSpec::Plane { .. } => {
                let (nx, ny) = self.domain.shape();
                let mut total = 0.0;
                for j in 0..ny {
                    let wy = if j == 0 || j + 1 == ny { 0.5 } else { 1.0 };
                    for i in 0..nx {
                        let wx = if i == 0 || i + 1 == nx { 0.5 } else { 1.0 };
                        total += wx * wy * v[j * nx + i];
                    }
                }
                total * self.domain.cell_area()
            }
        }
    }

    pub fn integrate(&self, field: &ScalarField) -> f64 {
        self.integrate_values(&field.values)
    }

    /// `h1 h2 Σ a b`: the inner product with respect to which the solver's
    /// functional gradient is taken (uniform weights on both domains).
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.domain.cell_area() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Zero-mean periodic solution of `Δw = rhs − mean(rhs)`.
    pub fn solve_poisson_torus(&self, rhs: &ScalarField) -> Result<ScalarField> {
        if !self.domain.is_torus() {
            return Err(Error::WrongDomain("torus"));
        }
        let w = self.spectral.apply_symbol(&rhs.values, |mu| if mu > 0.0 { -1.0 / mu } else { 0.0 });
        Ok(ScalarField::from_raw(self.domain, w))
    }
}

/// One-shot discrete Laplacian (builds transform plans on every call).
pub fn laplacian(field: &ScalarField) -> ScalarField {
    Grid::new(field.domain).laplacian(field)
}

pub fn integrate(field: &ScalarField) -> f64 {
    match field.domain {
        DomainSpec::Torus { .. } => field.domain.cell_area() * field.values.iter().sum::<f64>(),
        DomainSpec::Plane { .. } => Grid::new(field.domain).integrate(field),
    }
}

pub fn solve_poisson_torus(rhs: &ScalarField) -> Result<ScalarField> {
    Grid::new(rhs.domain).solve_poisson_torus(rhs)
}
