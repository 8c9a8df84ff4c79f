mod common;

use common::{low_rank, random_matrix};
use svlet_core::harness::{rmt_law_checks, spiked_observation, stream_rng, RmtCheckConfig};
use svlet_core::rmt::{
    asymptotic_denoise, estimate_rank, AsymptoticVariant, SVHT_CALIBRATED_THRESHOLD,
};
use svlet_core::spectral::{reconstruct, singular_values, svd, MatrixShape};
use svlet_core::{AspectRatio, DenoiseProblem, ShrinkageRule};

#[test]
fn desk_scale_laws_hold() {
    let checks = rmt_law_checks(&RmtCheckConfig::new(400, 1.0, 10, 2024)).unwrap();
    assert_eq!(checks.len(), 6);
    for c in &checks {
        assert!(c.passed, "{c:?}");
    }
}

#[test]
fn pure_noise_rank_is_near_zero() {
    let shape = MatrixShape::new(200, 200).unwrap();
    let total: usize = (0..20)
        .map(|t| {
            let s = singular_values(&random_matrix(200, 200, t)).unwrap();
            estimate_rank(&s, shape, 1.0).unwrap().r_star
        })
        .sum();
    assert!(total as f64 / 20.0 <= 1.0);
}

#[test]
fn single_supercritical_spike_is_counted() {
    let beta = AspectRatio::new(1.0).unwrap();
    let shape = MatrixShape::new(200, 200).unwrap();
    // The largest noise value itself exceeds the edge in roughly 10% of
    // draws at n = 200, so the rate is measured over many trials.
    let trials = 400;
    let hits = (0..trials)
        .filter(|&t| {
            let (y, sigma) =
                spiked_observation(200, beta, &[3.0], &mut stream_rng(t, &[])).unwrap();
            let s = singular_values(&y).unwrap();
            estimate_rank(&s, shape, sigma).unwrap().r_star == 1
        })
        .count();
    assert!(hits as f64 >= 0.85 * trials as f64, "{hits}/{trials}");
}

#[test]
fn optimal_shrink_is_identity_without_noise() {
    let x = low_rank(40, 40, 3, 5);
    let p = DenoiseProblem::new(x.clone(), 1e-12).unwrap();
    let f = svd(p.observed()).unwrap();
    let out = asymptotic_denoise(&p, &f, AsymptoticVariant::OptimalShrink).unwrap();
    assert!((out - &x).norm() <= 1e-6 * x.norm());
}

#[test]
fn optimal_shrink_removes_pure_noise() {
    let ratios: Vec<f64> = (0..10)
        .map(|t| {
            let y = random_matrix(100, 100, 900 + t);
            let p = DenoiseProblem::new(y.clone(), 1.0).unwrap();
            let f = svd(&y).unwrap();
            let out = asymptotic_denoise(&p, &f, AsymptoticVariant::OptimalShrink).unwrap();
            out.norm() / y.norm()
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean <= 0.05, "{ratios:?}");
}

#[test]
fn hard_threshold_variant_unrolls() {
    let y = low_rank(30, 30, 2, 6) + random_matrix(30, 30, 7) * 0.5;
    let p = DenoiseProblem::new(y, 0.5).unwrap();
    let f = svd(p.observed()).unwrap();
    let mu = SVHT_CALIBRATED_THRESHOLD * 30f64.sqrt() * 0.5;
    let direct = reconstruct(
        &f,
        &ShrinkageRule::svht(mu)
            .unwrap()
            .apply(f.spectrum())
            .unwrap(),
    )
    .unwrap();
    let wrapped = asymptotic_denoise(&p, &f, AsymptoticVariant::Svht4Sqrt3).unwrap();
    assert!((direct - wrapped).norm() <= 1e-12 * p.observed().norm());
}
