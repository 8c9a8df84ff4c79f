//! Shared fixtures for the criterion benchmarks.

use svlet_core::harness::{generate_problem, stream_rng};
use svlet_core::spectral::{svd, SvdFactors};
use svlet_core::DenoiseProblem;

pub const SEED: u64 = 2024;

/// Rank-`r` problem at the given SNR, drawn from a fixed stream.
pub fn problem(n: usize, m: usize, r: usize, snr: f64) -> DenoiseProblem {
    let mut rng = stream_rng(SEED, &[n as u64, m as u64, r as u64, snr.to_bits()]);
    generate_problem(n, m, r, snr, &mut rng)
        .expect("fixture parameters are valid")
        .1
}

pub fn factored(n: usize, m: usize, r: usize, snr: f64) -> (DenoiseProblem, SvdFactors) {
    let p = problem(n, m, r, snr);
    let f = svd(p.observed()).expect("fixture is finite");
    (p, f)
}
