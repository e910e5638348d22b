#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_duovortex")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// Value of `key` in a `key = value` document.
pub fn value(doc: &str, key: &str) -> String {
    doc.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{doc}"))
        .to_string()
}

pub fn number(doc: &str, key: &str) -> f64 {
    value(doc, key).parse().unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every value of a field dump, row-major.
pub fn dump_values(path: &Path) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).flat_map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>()).collect()
}

/// Sum of a few random low-frequency trigonometric modes, periodic on the torus.
pub fn random_field(d: duovortex::DomainSpec, rng: &mut rand_chacha::ChaCha8Rng, amp: f64) -> duovortex::ScalarField {
    use rand::Rng;
    let (lx, ly) = match d {
        duovortex::DomainSpec::Torus { l1, l2, .. } => (l1, l2),
        duovortex::DomainSpec::Plane { half_width, .. } => (2.0 * half_width, 2.0 * half_width),
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
    duovortex::ScalarField::from_fn(d, |x, y| {
        modes.iter().map(|&(a, kx, ky, p, q)| a * (tau * kx * x / lx + p).cos() * (tau * ky * y / ly + q).cos()).sum()
    })
}
