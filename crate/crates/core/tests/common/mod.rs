#![allow(dead_code)]

use svlet_core::harness::{gaussian_matrix, stream_rng};
use svlet_core::DMatrix;

pub fn random_matrix(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    gaussian_matrix(n, m, &mut stream_rng(seed, &[n as u64, m as u64]))
}

/// Rank-`r` Gaussian product `L R^T`.
pub fn low_rank(n: usize, m: usize, r: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, &[0xfac7]);
    gaussian_matrix(n, r, &mut rng) * gaussian_matrix(m, r, &mut rng).transpose()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
