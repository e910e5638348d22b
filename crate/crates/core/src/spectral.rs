// Fast transforms that diagonalize the discrete Laplacians: the 2D FFT for
// periodic grids and the 2D type-I sine transform for the Dirichlet square.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
enum Kind {
    Periodic {
        row_fwd: Arc<dyn Fft<f64>>,
        row_inv: Arc<dyn Fft<f64>>,
        col_fwd: Arc<dyn Fft<f64>>,
        col_inv: Arc<dyn Fft<f64>>,
    },
    Sine {
        row: Arc<dyn Fft<f64>>,
        col: Arc<dyn Fft<f64>>,
    },
}

/// Plans plus the Laplacian symbol `μ ≥ 0` per mode (`Δ ↦ −μ`), row-major
/// with `nx` fastest.
#[derive(Clone)]
pub(crate) struct Spectral {
    nx: usize,
    ny: usize,
    kind: Kind,
    symbol: Vec<f64>,
}

fn wavenumber(m: usize, n: usize, len: f64) -> f64 {
    let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * std::f64::consts::PI * signed / len
}

impl Spectral {
    pub(crate) fn periodic(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        let mut planner = FftPlanner::new();
        let kind = Kind::Periodic {
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        };
        let mut symbol = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let ky = wavenumber(j, ny, ly);
            for i in 0..nx {
                let kx = wavenumber(i, nx, lx);
                symbol.push(kx * kx + ky * ky);
            }
        }
        Self { nx, ny, kind, symbol }
    }

    /// Sine basis for the 5-point Laplacian with zero values just outside an
    /// `nx × ny` block of nodes with spacings `hx`, `hy`.
    pub(crate) fn dirichlet(nx: usize, ny: usize, hx: f64, hy: f64) -> Self {
        let mut planner = FftPlanner::new();
        let kind =
            Kind::Sine { row: planner.plan_fft_forward(2 * (nx + 1)), col: planner.plan_fft_forward(2 * (ny + 1)) };
        let sx: Vec<f64> = (1..=nx)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (nx + 1) as f64)).sin();
                4.0 * s * s / (hx * hx)
            })
            .collect();
        let sy: Vec<f64> = (1..=ny)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (ny + 1) as f64)).sin();
                4.0 * s * s / (hy * hy)
            })
            .collect();
        let mut symbol = Vec::with_capacity(nx * ny);
        for y in &sy {
            for x in &sx {
                symbol.push(x + y);
            }
        }
        Self { nx, ny, kind, symbol }
    }

    pub(crate) fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub(crate) fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(data.len(), self.nx * self.ny);
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        match &self.kind {
            Kind::Periodic { row_fwd, col_fwd, .. } => {
                self.along_rows(&mut buf, |row| row_fwd.process(row));
                self.along_cols(&mut buf, |col| col_fwd.process(col));
            }
            Kind::Sine { row, col } => {
                self.along_rows(&mut buf, |r| dst1(row.as_ref(), r));
                self.along_cols(&mut buf, |c| dst1(col.as_ref(), c));
            }
        }
        buf
    }

    pub(crate) fn inverse(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        match &self.kind {
            Kind::Periodic { row_inv, col_inv, .. } => {
                self.along_cols(&mut buf, |col| col_inv.process(col));
                self.along_rows(&mut buf, |row| row_inv.process(row));
                let scale = 1.0 / (self.nx * self.ny) as f64;
                buf.iter().map(|c| c.re * scale).collect()
            }
            Kind::Sine { row, col } => {
                self.along_cols(&mut buf, |c| dst1(col.as_ref(), c));
                self.along_rows(&mut buf, |r| dst1(row.as_ref(), r));
                let scale = 4.0 / ((self.nx + 1) * (self.ny + 1)) as f64;
                buf.iter().map(|c| c.re * scale).collect()
            }
        }
    }

    /// Applies `g(μ)` to every mode: `inverse(g(μ) · forward(data))`.
    pub(crate) fn apply_symbol(&self, data: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut hat = self.forward(data);
        for (c, &mu) in hat.iter_mut().zip(&self.symbol) {
            *c *= g(mu);
        }
        self.inverse(hat)
    }

    fn along_rows(&self, buf: &mut [Complex64], mut op: impl FnMut(&mut [Complex64])) {
        for row in buf.chunks_exact_mut(self.nx) {
            op(row);
        }
    }

    fn along_cols(&self, buf: &mut [Complex64], mut op: impl FnMut(&mut [Complex64])) {
        let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
        for i in 0..self.nx {
            for (j, c) in col.iter_mut().enumerate() {
                *c = buf[j * self.nx + i];
            }
            op(&mut col);
            for (j, c) in col.iter().enumerate() {
                buf[j * self.nx + i] = *c;
            }
        }
    }
}

/// Unnormalized DST-I of the real parts of `x`, in place:
/// `X_k = Σ_j x_j sin(π j k/(n+1))`, `j, k = 1..n`. Imaginary parts are ignored.
fn dst1(fft: &dyn Fft<f64>, x: &mut [Complex64]) {
    let n = x.len();
    let m = 2 * (n + 1);
    debug_assert_eq!(fft.len(), m);
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..n {
        y[j + 1] = Complex64::new(x[j].re, 0.0);
        y[m - 1 - j] = Complex64::new(-x[j].re, 0.0);
    }
    fft.process(&mut y);
    for k in 0..n {
        x[k] = Complex64::new(-0.5 * y[k + 1].im, 0.0);
    }
}
