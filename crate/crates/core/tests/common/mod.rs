#![allow(dead_code)]

use duovortex::{DomainSpec, ScalarField};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Sum of a few random low-frequency trigonometric modes, periodic on the torus.
pub fn random_field(d: DomainSpec, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
    let (lx, ly) = match d {
        DomainSpec::Torus { l1, l2, .. } => (l1, l2),
        DomainSpec::Plane { half_width, .. } => (2.0 * half_width, 2.0 * half_width),
    };
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.gen_range(-amp..amp),
                rng.gen_range(0..4) as f64,
                rng.gen_range(0..4) as f64,
                rng.gen_range(0.0..6.3),
                rng.gen_range(0.0..6.3),
            )
        })
        .collect();
    let tau = std::f64::consts::TAU;
    ScalarField::from_fn(d, |x, y| {
        modes.iter().map(|&(a, kx, ky, p, q)| a * (tau * kx * x / lx + p).cos() * (tau * ky * y / ly + q).cos()).sum()
    })
}
