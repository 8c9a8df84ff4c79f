//! Monte Carlo verifications: SURE unbiasedness, the noise-bulk and spike
//! laws, and finite-n convergence of the bulk-restricted SVLET to the
//! optimal shrinker.

use nalgebra::DMatrix;

use super::data::{gaussian_matrix, mean, standard_error, stream_rng};
use crate::error::{Error, Result};
use crate::rmt::{estimate_rank, quarter_circle_cdf, rho, theta_u, AspectRatio};
use crate::shrinkage::{optimal_bulk_shrink, ShrinkageRule, SvletBasis};
use crate::spectral::{reconstruct_signed, singular_values, svd, MatrixShape};
use crate::sure::{solve_svlet_bulk, sure_spectrum, SureSettings};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasednessReport {
    pub draws: usize,
    pub mean_sure: f64,
    pub mean_loss: f64,
    /// `sqrt(se(sure)^2 + se(loss)^2)`.
    pub combined_stderr: f64,
}

impl UnbiasednessReport {
    /// Gap between the two means in combined standard errors.
    pub fn z_score(&self) -> f64 {
        (self.mean_sure - self.mean_loss).abs() / self.combined_stderr
    }
}

/// Compares mean SURE with the mean true loss `||eta(Y) - X||_F^2` over
/// `draws` noise realizations around a fixed `x`. SVLET rules are
/// evaluated unclamped, which is the estimator SURE describes.
pub fn sure_unbiasedness(
    x: &DMatrix<f64>,
    sigma: f64,
    rule: &ShrinkageRule,
    draws: usize,
    seed: u64,
) -> Result<UnbiasednessReport> {
    if draws < 2 {
        return Err(Error::range("draws", draws as f64, "draws >= 2"));
    }
    let shape = MatrixShape::of(x)?;
    let settings = SureSettings::default();
    let mut sures = Vec::with_capacity(draws);
    let mut losses = Vec::with_capacity(draws);
    for draw in 0..draws {
        let mut rng = stream_rng(seed, &[draw as u64]);
        let y = x + gaussian_matrix(shape.n(), shape.m(), &mut rng) * sigma;
        let factors = svd(&y)?;
        let report = sure_spectrum(factors.spectrum(), shape, sigma, rule, &settings)?;
        let estimate = reconstruct_signed(&factors, &rule.apply_raw(factors.spectrum())?)?;
        sures.push(report.sure);
        losses.push((estimate - x).norm_squared());
    }
    Ok(UnbiasednessReport {
        draws,
        mean_sure: mean(&sures),
        mean_loss: mean(&losses),
        combined_stderr: standard_error(&sures).hypot(standard_error(&losses)),
    })
}

/// Calibrated spiked model: `n x m` with `m = round(n / beta)`, spikes on
/// the leading coordinate axes and noise of variance `1/m`.
pub fn spiked_observation(
    n: usize,
    beta: AspectRatio,
    spikes: &[f64],
    rng: &mut super::TrialRng,
) -> Result<(DMatrix<f64>, f64)> {
    let m = (n as f64 / beta.beta()).round() as usize;
    if spikes.len() > n {
        return Err(Error::range(
            "spikes",
            spikes.len() as f64,
            "at most n spikes",
        ));
    }
    let sigma = 1.0 / (m as f64).sqrt();
    let mut y = gaussian_matrix(n, m, rng) * sigma;
    for (k, &x) in spikes.iter().enumerate() {
        y[(k, k)] += x;
    }
    Ok((y, sigma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticConfig {
    pub n_values: Vec<usize>,
    pub spikes: Vec<f64>,
    pub beta: f64,
    pub seeds: Vec<u64>,
    /// Basis scale `T` on the calibrated axis; `None` means 1.5 times the
    /// bulk edge.
    pub scale: Option<f64>,
    /// Basis order; `None` uses `r*`.
    pub order: Option<usize>,
}

impl Default for AsymptoticConfig {
    fn default() -> Self {
        Self {
            n_values: vec![200, 1000],
            spikes: vec![2.0, 3.0, 4.0],
            beta: 1.0,
            seeds: (0..5).collect(),
            scale: None,
            order: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeFit {
    pub y: f64,
    pub svlet: f64,
    pub optimal: f64,
}

impl SpikeFit {
    pub fn relative_deviation(&self) -> f64 {
        (self.svlet - self.optimal).abs() / self.optimal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCell {
    pub n: usize,
    pub seed: u64,
    pub r_star: usize,
    /// Detected components that correspond to planted spikes.
    pub fits: Vec<SpikeFit>,
    pub max_relative_deviation: Option<f64>,
    /// Why the cell could not be evaluated.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub cells: Vec<AsymptoticCell>,
    /// Seed-averaged max deviation per `n`, in `n_values` order.
    pub mean_deviation: Vec<(usize, Option<f64>)>,
}

impl AsymptoticReport {
    pub fn non_increasing(&self) -> bool {
        self.mean_deviation
            .windows(2)
            .all(|w| matches!((w[0].1, w[1].1), (Some(a), Some(b)) if b <= a))
    }
}

fn asymptotic_cell(
    cfg: &AsymptoticConfig,
    beta: AspectRatio,
    n: usize,
    seed: u64,
) -> Result<AsymptoticCell> {
    let mut rng = stream_rng(seed, &[n as u64]);
    let (y, sigma) = spiked_observation(n, beta, &cfg.spikes, &mut rng)?;
    let shape = MatrixShape::of(&y)?;
    let spectrum = singular_values(&y)?;
    let r_star = estimate_rank(&spectrum, shape, sigma)?.r_star;
    let mut cell = AsymptoticCell {
        n,
        seed,
        r_star,
        fits: Vec::new(),
        max_relative_deviation: None,
        flag: None,
    };
    if r_star == 0 {
        cell.flag = Some("no singular value above the bulk edge".into());
        return Ok(cell);
    }

    // Calibration with sigma = 1/sqrt(m) is the identity, so the calibrated
    // scale T maps to C = T / sigma.
    let scale = cfg.scale.unwrap_or(1.5 * beta.upper_edge());
    let order = cfg.order.unwrap_or(r_star);
    let basis = SvletBasis::new(order, scale / sigma, sigma)?;
    let (fitted, _) = solve_svlet_bulk(
        &spectrum,
        shape,
        sigma,
        &basis,
        r_star,
        &SureSettings::default(),
    )?;

    let planted = cfg
        .spikes
        .iter()
        .filter(|&&x| x > beta.transition())
        .count();
    cell.fits = spectrum[..r_star.min(planted)]
        .iter()
        .map(|&y| SpikeFit {
            y,
            svlet: fitted.raw(y).max(0.0),
            optimal: optimal_bulk_shrink(y, beta.beta()),
        })
        .collect();
    cell.max_relative_deviation = cell
        .fits
        .iter()
        .map(SpikeFit::relative_deviation)
        .reduce(f64::max);
    if cell.fits.is_empty() {
        cell.flag = Some("detected components are all bulk leakage".into());
    }
    Ok(cell)
}

/// Fits SVLET on the components above the bulk edge (everything else is
/// shrunk to zero) and compares it with the optimal bulk shrinker at the
/// observed spike locations, for each `n` and seed.
pub fn verify_asymptotic_optimality(cfg: &AsymptoticConfig) -> Result<AsymptoticReport> {
    let beta = AspectRatio::new(cfg.beta)?;
    if cfg.n_values.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Contract("need at least one n and one seed".into()));
    }
    let mut cells = Vec::new();
    let mut mean_deviation = Vec::new();
    for &n in &cfg.n_values {
        let start = cells.len();
        for &seed in &cfg.seeds {
            cells.push(asymptotic_cell(cfg, beta, n, seed)?);
        }
        let devs: Option<Vec<f64>> = cells[start..]
            .iter()
            .map(|c| c.max_relative_deviation)
            .collect();
        mean_deviation.push((n, devs.map(|d| mean(&d))));
    }
    Ok(AsymptoticReport {
        cells,
        mean_deviation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmtCheckConfig {
    pub n: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    pub spikes: Vec<f64>,
    pub overlap_spike: f64,
}

impl RmtCheckConfig {
    pub fn new(n: usize, beta: f64, trials: usize, seed: u64) -> Self {
        Self {
            n,
            beta,
            trials,
            seed,
            spikes: vec![1.5, 2.0, 3.0],
            overlap_spike: 2.0,
        }
    }
}

pub const EDGE_TOL: f64 = 0.1;
pub const KS_TOL: f64 = 0.05;
pub const SPIKE_REL_TOL: f64 = 0.05;
pub const OVERLAP_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct LawCheck {
    pub law: String,
    pub observed: f64,
    pub expected: f64,
    /// Absolute, or relative for spike locations.
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl LawCheck {
    fn new(law: String, observed: f64, expected: f64, deviation: f64, tolerance: f64) -> Self {
        Self {
            law,
            observed,
            expected,
            deviation,
            tolerance,
            passed: deviation <= tolerance,
        }
    }
}

/// Sup distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let l = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let f = cdf(w);
            (f - i as f64 / l).abs().max(((i + 1) as f64 / l - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Bulk edge, bulk shape (KS), spike locations and the left-vector overlap
/// on calibrated `n x n/beta` matrices.
pub fn rmt_law_checks(cfg: &RmtCheckConfig) -> Result<Vec<LawCheck>> {
    if cfg.trials == 0 {
        return Err(Error::range("trials", 0.0, "trials >= 1"));
    }
    if cfg.n == 0 {
        return Err(Error::range("n", 0.0, "n >= 1"));
    }
    let beta = AspectRatio::new(cfg.beta)?;
    let mut checks = Vec::new();

    let (noise, _) = spiked_observation(cfg.n, beta, &[], &mut stream_rng(cfg.seed, &[0]))?;
    let bulk = singular_values(&noise)?;
    let edge = beta.upper_edge();
    checks.push(LawCheck::new(
        "bulk edge".into(),
        bulk[0],
        edge,
        (bulk[0] - edge).abs(),
        EDGE_TOL,
    ));
    let ks = ks_distance(&bulk, |w| quarter_circle_cdf(w, beta));
    checks.push(LawCheck::new(
        "quarter-circle KS".into(),
        ks,
        0.0,
        ks,
        KS_TOL,
    ));

    for (si, &x) in cfg.spikes.iter().enumerate() {
        let tops: Vec<f64> = (0..cfg.trials)
            .map(|t| {
                let mut rng = stream_rng(cfg.seed, &[1, si as u64, t as u64]);
                let (y, _) = spiked_observation(cfg.n, beta, &[x], &mut rng)?;
                Ok(singular_values(&y)?[0])
            })
            .collect::<Result<_>>()?;
        let observed = mean(&tops);
        let expected = rho(x, beta);
        checks.push(LawCheck::new(
            format!("spike location x={x}"),
            observed,
            expected,
            (observed / expected - 1.0).abs(),
            SPIKE_REL_TOL,
        ));
    }

    let x = cfg.overlap_spike;
    let overlaps: Vec<f64> = (0..cfg.trials)
        .map(|t| {
            let mut rng = stream_rng(cfg.seed, &[2, t as u64]);
            let (y, _) = spiked_observation(cfg.n, beta, &[x], &mut rng)?;
            Ok(svd(&y)?.u[(0, 0)].abs())
        })
        .collect::<Result<_>>()?;
    let observed = mean(&overlaps);
    let expected = theta_u(x, beta);
    checks.push(LawCheck::new(
        format!("left overlap x={x}"),
        observed,
        expected,
        (observed - expected).abs(),
        OVERLAP_TOL,
    ));
    Ok(checks)
}
