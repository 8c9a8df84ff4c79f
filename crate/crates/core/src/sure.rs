//! Stein's unbiased risk estimate for spectral estimators.
//!
//! For `Y = X + W` with i.i.d. `N(0, sigma^2)` noise and a spectral estimator
//! `F(Y) = sum_i eta(y_i) u_i v_i^T`,
//!
//! ```text
//! SURE = -n m sigma^2 + ||Y - F(Y)||_F^2 + 2 sigma^2 div F(Y)
//! div F(Y) = sum_i eta'(y_i) + |n - m| sum_i eta(y_i) / y_i
//!          + 2 sum_{i != j} y_i eta(y_i) / (y_i^2 - y_j^2)
//! ```
//!
//! The divergence needs a simple, strictly positive spectrum. SVLET is
//! always evaluated here in its unclamped form, since that is the function
//! whose coefficients the closed-form solve optimizes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::shrinkage::{check_spectrum, ShrinkageRule, SvletBasis};
use crate::spectral::{DenoiseProblem, MatrixShape, SvdFactors};

/// Knobs for the SURE engine. Defaults are the documented module constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SureSettings {
    /// Spectrum is simple when every `|y_i^2 - y_j^2| > gap_rel * y_1^2`.
    pub gap_rel: f64,
    /// Break ties by subtracting `1e-9 * y_1 * index` instead of failing.
    pub jitter_ties: bool,
    /// Condition number of the Gram matrix above which a ridge is added.
    pub ridge_condition: f64,
    /// Ridge magnitude relative to `trace(M) / K`.
    pub ridge_scale: f64,
    /// Accepted `||M a - c|| / ||c||` after the solve.
    pub solve_residual_tol: f64,
    /// Evaluate grid points on the rayon pool.
    pub parallel: bool,
}

pub const GAP_REL_TOL: f64 = 1e-10;
pub const RIDGE_CONDITION: f64 = 1e12;
pub const RIDGE_SCALE: f64 = 1e-10;
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-8;
pub const TIE_JITTER: f64 = 1e-9;

impl Default for SureSettings {
    fn default() -> Self {
        Self {
            gap_rel: GAP_REL_TOL,
            jitter_ties: false,
            ridge_condition: RIDGE_CONDITION,
            ridge_scale: RIDGE_SCALE,
            solve_residual_tol: SOLVE_RESIDUAL_TOL,
            parallel: false,
        }
    }
}

/// One visited grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub params: Vec<f64>,
    pub sure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SureReport {
    pub rule: ShrinkageRule,
    pub sure: f64,
    /// `||Y - F(Y)||_F^2`, computed on the spectrum.
    pub residual: f64,
    pub divergence: f64,
    /// Clamped minus unclamped residual; non-zero only for SVLET rules whose
    /// raw expansion dips below zero somewhere on the spectrum.
    pub clamp_discrepancy: f64,
    pub sigma: f64,
    pub shape: MatrixShape,
    /// Parameter names for the columns of `trace`.
    pub trace_columns: Vec<&'static str>,
    pub trace: Vec<TracePoint>,
}

impl SureReport {
    fn new(
        rule: ShrinkageRule,
        residual: f64,
        divergence: f64,
        clamp_discrepancy: f64,
        sigma: f64,
        shape: MatrixShape,
    ) -> Self {
        let s2 = sigma * sigma;
        let sure = -shape.entries() * s2 + residual + 2.0 * s2 * divergence;
        let report = Self {
            rule,
            sure,
            residual,
            divergence,
            clamp_discrepancy,
            sigma,
            shape,
            trace_columns: Vec::new(),
            trace: Vec::new(),
        };
        debug_assert!(report.identity_error() <= 1e-10);
        report
    }

    /// Relative error of `sure = -n m sigma^2 + residual + 2 sigma^2 div`.
    pub fn identity_error(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        let rebuilt = -self.shape.entries() * s2 + self.residual + 2.0 * s2 * self.divergence;
        let scale = self
            .sure
            .abs()
            .max(self.residual.abs())
            .max(self.shape.entries() * s2);
        (self.sure - rebuilt).abs() / scale
    }
}

/// Returns a copy of `spectrum` with ties pulled apart by
/// `TIE_JITTER * y_1 * index`, clamped at zero.
pub fn separate_ties(spectrum: &[f64]) -> Vec<f64> {
    let top = spectrum.first().copied().unwrap_or(0.0);
    spectrum
        .iter()
        .enumerate()
        .map(|(i, &y)| (y - TIE_JITTER * top * i as f64).max(0.0))
        .collect()
}

/// Checks that the spectrum is strictly positive and simple.
pub fn check_simple(spectrum: &[f64], gap_rel: f64) -> Result<()> {
    check_spectrum(spectrum)?;
    if let Some(index) = spectrum.iter().position(|&y| y <= 0.0) {
        return Err(Error::ZeroSingularValue { index });
    }
    let Some(&top) = spectrum.first() else {
        return Ok(());
    };
    let tol = gap_rel * top * top;
    // Descending order makes adjacent pairs the closest ones.
    for i in 0..spectrum.len().saturating_sub(1) {
        let (a, b) = (spectrum[i], spectrum[i + 1]);
        let gap = (a - b) * (a + b);
        if gap <= tol {
            return Err(Error::RepeatedSingularValue {
                i,
                j: i + 1,
                gap,
                tol,
            });
        }
    }
    Ok(())
}

fn check_shape(spectrum: &[f64], shape: MatrixShape) -> Result<()> {
    if spectrum.len() != shape.len() {
        return Err(Error::Dimension {
            expected: format!("{} singular values for a {shape} matrix", shape.len()),
            found: spectrum.len().to_string(),
        });
    }
    Ok(())
}

/// `sum_{j != i} y_i / (y_i^2 - y_j^2)` for the given `i`.
#[inline]
fn cross_weight(spectrum: &[f64], i: usize) -> f64 {
    let yi = spectrum[i];
    let mut acc = 0.0;
    for (j, &yj) in spectrum.iter().enumerate() {
        if j != i {
            acc += yi / ((yi - yj) * (yi + yj));
        }
    }
    acc
}

/// One pass over the spectrum: `(residual, clamped residual, divergence)`.
fn accumulate(spectrum: &[f64], rule: &ShrinkageRule, shape: MatrixShape) -> (f64, f64, f64) {
    let gap = shape.dim_gap() as f64;
    let clamps = matches!(rule, ShrinkageRule::Svlet(_));
    let (mut residual, mut clamped_residual) = (0.0, 0.0);
    let (mut deriv, mut ratio, mut cross) = (0.0, 0.0, 0.0);
    for (i, &y) in spectrum.iter().enumerate() {
        let (eta, d) = rule.raw_value_and_derivative(y, i);
        residual += (y - eta) * (y - eta);
        let clamped = if clamps { eta.max(0.0) } else { eta };
        clamped_residual += (y - clamped) * (y - clamped);
        deriv += d;
        ratio += eta / y;
        cross += eta * cross_weight(spectrum, i);
    }
    (
        residual,
        clamped_residual,
        deriv + gap * ratio + 2.0 * cross,
    )
}

fn divergence_unchecked(spectrum: &[f64], rule: &ShrinkageRule, shape: MatrixShape) -> f64 {
    accumulate(spectrum, rule, shape).2
}

/// Divergence of the spectral estimator induced by `rule` at `spectrum`.
pub fn divergence(spectrum: &[f64], rule: &ShrinkageRule, shape: MatrixShape) -> Result<f64> {
    divergence_with(spectrum, rule, shape, &SureSettings::default())
}

pub fn divergence_with(
    spectrum: &[f64],
    rule: &ShrinkageRule,
    shape: MatrixShape,
    settings: &SureSettings,
) -> Result<f64> {
    check_shape(spectrum, shape)?;
    let spectrum = prepare(spectrum, settings)?;
    rule.check_input(&spectrum)?;
    Ok(divergence_unchecked(&spectrum, rule, shape))
}

fn prepare(spectrum: &[f64], settings: &SureSettings) -> Result<Vec<f64>> {
    let spectrum = if settings.jitter_ties {
        separate_ties(spectrum)
    } else {
        spectrum.to_vec()
    };
    check_simple(&spectrum, settings.gap_rel)?;
    Ok(spectrum)
}

fn report_unchecked(
    spectrum: &[f64],
    shape: MatrixShape,
    sigma: f64,
    rule: &ShrinkageRule,
) -> SureReport {
    let (residual, clamped_residual, div) = accumulate(spectrum, rule, shape);
    SureReport::new(
        rule.clone(),
        residual,
        div,
        clamped_residual - residual,
        sigma,
        shape,
    )
}

/// SURE of `rule` given only the observed spectrum.
pub fn sure_spectrum(
    spectrum: &[f64],
    shape: MatrixShape,
    sigma: f64,
    rule: &ShrinkageRule,
    settings: &SureSettings,
) -> Result<SureReport> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::range("sigma", sigma, "sigma > 0"));
    }
    check_shape(spectrum, shape)?;
    let spectrum = prepare(spectrum, settings)?;
    rule.check_input(&spectrum)?;
    Ok(report_unchecked(&spectrum, shape, sigma, rule))
}

pub fn sure(
    problem: &DenoiseProblem,
    factors: &SvdFactors,
    rule: &ShrinkageRule,
) -> Result<SureReport> {
    sure_spectrum(
        factors.spectrum(),
        problem.shape(),
        problem.sigma(),
        rule,
        &SureSettings::default(),
    )
}

/// Solution of the SVLET normal equations `M a = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    /// `M_{k,l} = sum_i phi_k(y_i) phi_l(y_i)`.
    pub gram: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub solution: DVector<f64>,
    pub condition_estimate: f64,
    /// Ridge `delta` added to the diagonal, 0 when the direct solve was used.
    pub ridge_used: f64,
}

impl LinearSystem {
    /// `||(M + delta I) a - c|| / ||c||`.
    pub fn relative_residual(&self) -> f64 {
        let k = self.gram.nrows();
        let m = &self.gram + DMatrix::<f64>::identity(k, k) * self.ridge_used;
        let r = (m * &self.solution - &self.rhs).norm();
        let c = self.rhs.norm();
        if c > 0.0 {
            r / c
        } else {
            r
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvletSolve {
    pub system: LinearSystem,
    pub rule: ShrinkageRule,
    pub report: SureReport,
}

impl SvletSolve {
    pub fn coefficients(&self) -> &[f64] {
        self.system.solution.as_slice()
    }

    pub fn basis(&self) -> &SvletBasis {
        match &self.rule {
            ShrinkageRule::Svlet(b) => b,
            _ => unreachable!("SvletSolve always holds an SVLET rule"),
        }
    }
}

fn condition_number(gram: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Builds and solves `M a = c` over the first `active` singular values.
/// The cross-term sum still runs over the whole spectrum.
fn solve_system(
    spectrum: &[f64],
    shape: MatrixShape,
    sigma: f64,
    basis: &SvletBasis,
    active: usize,
    settings: &SureSettings,
) -> Result<LinearSystem> {
    let k = basis.order();
    let s2 = sigma * sigma;
    let gap = shape.dim_gap() as f64;
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    let mut phi = vec![0.0; k];
    for (i, &y) in spectrum.iter().enumerate().take(active) {
        let g = y - gap * s2 / y - 2.0 * s2 * cross_weight(spectrum, i);
        for (idx, p) in phi.iter_mut().enumerate() {
            *p = basis.phi(idx + 1, y);
        }
        for a in 0..k {
            rhs[a] += g * phi[a] - s2 * basis.dphi(a + 1, y);
            for b in 0..=a {
                gram[(a, b)] += phi[a] * phi[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }

    let condition_estimate = condition_number(&gram);
    let mut ridge_used = 0.0;
    let mut system = gram.clone();
    if !(condition_estimate <= settings.ridge_condition) {
        ridge_used = settings.ridge_scale * gram.trace() / k as f64;
        for d in 0..k {
            system[(d, d)] += ridge_used;
        }
    }

    let failed = Error::SolverFailed {
        order: k,
        condition: condition_estimate,
    };
    let solution = system
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or(failed.clone())?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(failed);
    }
    let out = LinearSystem {
        gram,
        rhs,
        solution,
        condition_estimate,
        ridge_used,
    };
    if !(out.relative_residual() <= settings.solve_residual_tol) {
        return Err(failed);
    }
    Ok(out)
}

/// Closed-form SURE-optimal SVLET coefficients for order `order` and
/// scale constant `c` (`T = c sigma`).
pub fn solve_svlet(
    problem: &DenoiseProblem,
    factors: &SvdFactors,
    order: usize,
    c: f64,
) -> Result<SvletSolve> {
    solve_svlet_spectrum(
        factors.spectrum(),
        problem.shape(),
        problem.sigma(),
        order,
        c,
        &SureSettings::default(),
    )
}

pub fn solve_svlet_spectrum(
    spectrum: &[f64],
    shape: MatrixShape,
    sigma: f64,
    order: usize,
    c: f64,
    settings: &SureSettings,
) -> Result<SvletSolve> {
    let basis = SvletBasis::new(order, c, sigma)?;
    check_shape(spectrum, shape)?;
    let spectrum = prepare(spectrum, settings)?;
    let system = solve_system(&spectrum, shape, sigma, &basis, spectrum.len(), settings)?;
    let basis = basis.with_coefficients(system.solution.iter().copied().collect())?;
    let rule = ShrinkageRule::Svlet(basis);
    let report = report_unchecked(&spectrum, shape, sigma, &rule);
    Ok(SvletSolve {
        system,
        rule,
        report,
    })
}

/// SVLET fitted as a bulk shrinker: only the `active` largest singular
/// values enter `M` and `c`; the rest are mapped to zero.
pub fn solve_svlet_bulk(
    spectrum: &[f64],
    shape: MatrixShape,
    sigma: f64,
    basis: &SvletBasis,
    active: usize,
    settings: &SureSettings,
) -> Result<(SvletBasis, LinearSystem)> {
    check_shape(spectrum, shape)?;
    if active == 0 || active > spectrum.len() {
        return Err(Error::range("active", active as f64, "1 <= active <= L"));
    }
    let spectrum = prepare(spectrum, settings)?;
    let system = solve_system(&spectrum, shape, sigma, basis, active, settings)?;
    let fitted = basis
        .clone()
        .with_coefficients(system.solution.iter().copied().collect())?;
    Ok((fitted, system))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TuneFamily {
    Svst,
    Atn,
    Svlt,
}

impl TuneFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Svst => "svst",
            Self::Atn => "atn",
            Self::Svlt => "svlt",
        }
    }
}

impl std::str::FromStr for TuneFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svst" => Ok(Self::Svst),
            "atn" => Ok(Self::Atn),
            "svlt" => Ok(Self::Svlt),
            other => Err(Error::Contract(format!("unknown tuning family {other:?}"))),
        }
    }
}

pub const SVST_GRID_POINTS: usize = 100;
pub const ATN_TAU_POINTS: usize = 100;
pub const ATN_GAMMA_MAX: usize = 20;
pub const SVLT_P1: f64 = 100.0;
pub const SVLT_P3_POINTS: usize = 50;

/// Parameter grid for SURE tuning. Every axis is sorted ascending so that the
/// first minimum found is the lexicographically smallest.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Svst {
        lambdas: Vec<f64>,
    },
    Atn {
        taus: Vec<f64>,
        gammas: Vec<f64>,
    },
    Svlt {
        p1: f64,
        p2s: Vec<f64>,
        p3s: Vec<f64>,
    },
}

/// `count` equally spaced points in `(0, upper]`.
pub fn open_grid(upper: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|j| upper * j as f64 / count as f64)
        .collect()
}

impl GridSpec {
    /// Default ranges: thresholds over `(0, y_1 / 2]`, ATN exponents
    /// `1..=20`, SVLT slope fixed at 100 with centers `1..=L`.
    pub fn default_for(family: TuneFamily, spectrum: &[f64]) -> Self {
        let top = spectrum.first().copied().unwrap_or(0.0);
        let half = 0.5 * top;
        match family {
            TuneFamily::Svst => Self::Svst {
                lambdas: open_grid(half, SVST_GRID_POINTS),
            },
            TuneFamily::Atn => Self::Atn {
                taus: open_grid(half, ATN_TAU_POINTS),
                gammas: (1..=ATN_GAMMA_MAX).map(|g| g as f64).collect(),
            },
            TuneFamily::Svlt => Self::Svlt {
                p1: SVLT_P1,
                p2s: (1..=spectrum.len()).map(|p| p as f64).collect(),
                p3s: open_grid(half, SVLT_P3_POINTS),
            },
        }
    }

    pub fn family(&self) -> TuneFamily {
        match self {
            Self::Svst { .. } => TuneFamily::Svst,
            Self::Atn { .. } => TuneFamily::Atn,
            Self::Svlt { .. } => TuneFamily::Svlt,
        }
    }

    pub fn columns(&self) -> Vec<&'static str> {
        match self {
            Self::Svst { .. } => vec!["lambda"],
            Self::Atn { .. } => vec!["tau", "gamma"],
            Self::Svlt { .. } => vec!["p1", "p2", "p3"],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Svst { lambdas } => lambdas.len(),
            Self::Atn { taus, gammas } => taus.len() * gammas.len(),
            Self::Svlt { p2s, p3s, .. } => p2s.len() * p3s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter tuple of grid point `idx`, in lexicographic order.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self {
            Self::Svst { lambdas } => vec![lambdas[idx]],
            Self::Atn { taus, gammas } => {
                vec![taus[idx / gammas.len()], gammas[idx % gammas.len()]]
            }
            Self::Svlt { p1, p2s, p3s } => {
                vec![*p1, p2s[idx / p3s.len()], p3s[idx % p3s.len()]]
            }
        }
    }

    pub fn rule(&self, params: &[f64]) -> Result<ShrinkageRule> {
        match self {
            Self::Svst { .. } => ShrinkageRule::svst(params[0]),
            Self::Atn { .. } => ShrinkageRule::atn(params[0], params[1]),
            Self::Svlt { .. } => ShrinkageRule::svlt(params[0], params[1], params[2]),
        }
    }
}

fn lexicographically_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Exhaustive SURE minimization over `grid`.
pub fn tune_grid(
    problem: &DenoiseProblem,
    factors: &SvdFactors,
    grid: &GridSpec,
) -> Result<SureReport> {
    tune_grid_spectrum(
        factors.spectrum(),
        problem.shape(),
        problem.sigma(),
        grid,
        &SureSettings::default(),
    )
}

pub fn tune_grid_spectrum(
    spectrum: &[f64],
    shape: MatrixShape,
    sigma: f64,
    grid: &GridSpec,
    settings: &SureSettings,
) -> Result<SureReport> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::range("sigma", sigma, "sigma > 0"));
    }
    if grid.is_empty() {
        return Err(Error::Contract("empty tuning grid".into()));
    }
    check_shape(spectrum, shape)?;
    let spectrum = prepare(spectrum, settings)?;

    let evaluate = |idx: usize| -> Result<TracePoint> {
        let params = grid.point(idx);
        let rule = grid.rule(&params)?;
        rule.check_input(&spectrum)?;
        let report = report_unchecked(&spectrum, shape, sigma, &rule);
        Ok(TracePoint {
            params,
            sure: report.sure,
        })
    };
    let trace: Vec<TracePoint> = if settings.parallel {
        (0..grid.len())
            .into_par_iter()
            .map(evaluate)
            .collect::<Result<_>>()?
    } else {
        (0..grid.len()).map(evaluate).collect::<Result<_>>()?
    };

    let mut best = 0;
    for (idx, point) in trace.iter().enumerate().skip(1) {
        let incumbent = &trace[best];
        if point.sure < incumbent.sure
            || (point.sure == incumbent.sure
                && lexicographically_less(&point.params, &incumbent.params))
        {
            best = idx;
        }
    }
    let rule = grid.rule(&trace[best].params)?;
    let mut report = report_unchecked(&spectrum, shape, sigma, &rule);
    report.trace_columns = grid.columns();
    report.trace = trace;
    Ok(report)
}
