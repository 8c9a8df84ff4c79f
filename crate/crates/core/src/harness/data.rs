//! Synthetic low-rank problems and the NMSE figure of merit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::spectral::DenoiseProblem;

/// Portable, seedable generator used by every harness routine.
pub type TrialRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed` to give an independent stream key.
pub fn stream_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

pub fn stream_rng(seed: u64, parts: &[u64]) -> TrialRng {
    TrialRng::seed_from_u64(stream_seed(seed, parts))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = rng.sample(StandardNormal);
        }
    }
    out
}

/// `X = L R^T` with Gaussian factors plus white noise scaled so that
/// `||X||_F^2 / (n m sigma^2)` equals `snr` exactly.
pub fn generate_problem<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    r: usize,
    snr: f64,
    rng: &mut R,
) -> Result<(DMatrix<f64>, DenoiseProblem)> {
    if n == 0 || m == 0 {
        return Err(Error::Dimension {
            expected: "at least 1x1".into(),
            found: format!("{n}x{m}"),
        });
    }
    if r == 0 || r > n.min(m) {
        return Err(Error::range("r", r as f64, "1 <= r <= min(n, m)"));
    }
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::range("snr", snr, "snr > 0"));
    }
    let left = gaussian_matrix(n, r, rng);
    let right = gaussian_matrix(m, r, rng);
    let x = &left * right.transpose();
    let sigma = x.norm() / (snr * n as f64 * m as f64).sqrt();
    let y = &x + gaussian_matrix(n, m, rng) * sigma;
    Ok((x, DenoiseProblem::new(y, sigma)?))
}

/// Per-trial ratios `||Xhat - X||_F^2 / ||X||_F^2`.
pub fn nmse_ratios(estimates: &[DMatrix<f64>], truths: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    if estimates.is_empty() || estimates.len() != truths.len() {
        return Err(Error::Contract(format!(
            "nmse needs equal-length nonempty lists, got {} estimates and {} truths",
            estimates.len(),
            truths.len()
        )));
    }
    estimates
        .iter()
        .zip(truths)
        .enumerate()
        .map(|(p, (est, truth))| {
            if est.shape() != truth.shape() {
                return Err(Error::Dimension {
                    expected: format!("{:?}", truth.shape()),
                    found: format!("{:?} (trial {p})", est.shape()),
                });
            }
            let energy = truth.norm_squared();
            if energy <= 0.0 {
                return Err(Error::Contract(format!("trial {p} has a zero signal")));
            }
            Ok((est - truth).norm_squared() / energy)
        })
        .collect()
}

pub fn nmse(estimates: &[DMatrix<f64>], truths: &[DMatrix<f64>]) -> Result<f64> {
    Ok(mean(&nmse_ratios(estimates, truths)?))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean; zero for a single sample.
pub fn standard_error(values: &[f64]) -> f64 {
    let p = values.len();
    if p < 2 {
        return 0.0;
    }
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (p - 1) as f64;
    (var / p as f64).sqrt()
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let p = values.len();
    if p == 0 {
        f64::NAN
    } else if p % 2 == 1 {
        values[p / 2]
    } else {
        0.5 * (values[p / 2 - 1] + values[p / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nmse_examples() {
        let x = DMatrix::from_element(3, 2, 1.0);
        assert_eq!(
            nmse(std::slice::from_ref(&x), std::slice::from_ref(&x)).unwrap(),
            0.0
        );
        assert_eq!(
            nmse(&[DMatrix::zeros(3, 2)], std::slice::from_ref(&x)).unwrap(),
            1.0
        );

        let truths = vec![x.clone(), x.clone()];
        let a = &x * (1.0 - 0.2f64.sqrt());
        let b = &x * (1.0 - 0.4f64.sqrt());
        let v = nmse(&[a, b], &truths).unwrap();
        assert!((v - 0.3).abs() < 1e-14);
    }

    #[test]
    fn nmse_contract() {
        assert!(matches!(nmse(&[], &[]), Err(Error::Contract(_))));
        let x = DMatrix::from_element(2, 2, 1.0);
        assert!(matches!(
            nmse(&[DMatrix::zeros(2, 3)], &[x]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn snr_is_exact_and_bitwise_reproducible() {
        let (x, p) = generate_problem(30, 20, 4, 4.0, &mut stream_rng(9, &[1])).unwrap();
        let expect = x.norm() / (4.0f64 * 600.0).sqrt();
        assert_eq!(p.sigma(), expect);
        let (x2, p2) = generate_problem(30, 20, 4, 4.0, &mut stream_rng(9, &[1])).unwrap();
        assert_eq!(x, x2);
        assert_eq!(p.observed(), p2.observed());
    }

    #[test]
    fn full_rank_signal() {
        let (x, _) = generate_problem(12, 9, 9, 1.0, &mut stream_rng(3, &[])).unwrap();
        let s = crate::spectral::singular_values(&x).unwrap();
        assert!(s.iter().all(|&v| v > 1e-8 * s[0]));
    }

    #[test]
    fn signal_energy_matches_wishart_trace() {
        let mut rng = stream_rng(17, &[]);
        let total: f64 = (0..200)
            .map(|_| {
                generate_problem(50, 50, 5, 1.0, &mut rng)
                    .unwrap()
                    .0
                    .norm_squared()
            })
            .sum();
        let avg = total / 200.0;
        assert!((avg / 12_500.0 - 1.0).abs() < 0.05, "{avg}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = stream_rng(0, &[]);
        assert!(generate_problem(5, 5, 0, 1.0, &mut rng).is_err());
        assert!(generate_problem(5, 5, 6, 1.0, &mut rng).is_err());
        assert!(generate_problem(5, 5, 2, 0.0, &mut rng).is_err());
    }

    #[test]
    fn streams_differ() {
        assert_ne!(stream_seed(1, &[0, 1]), stream_seed(1, &[1, 0]));
        assert_ne!(stream_seed(1, &[]), stream_seed(2, &[]));
    }
}
