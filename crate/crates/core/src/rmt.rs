//! Large-matrix laws for Gaussian noise and the asymptotic estimators built
//! on them.
//!
//! Calibrated scale: a noise matrix with entry variance `1 / max(n, m)` has
//! singular values filling `[1 - sqrt(beta), 1 + sqrt(beta)]` where
//! `beta = min(n, m) / max(n, m)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::shrinkage::{optimal_bulk_shrink, ShrinkageRule};
use crate::spectral::{reconstruct, DenoiseProblem, MatrixShape, SvdFactors};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspectRatio(f64);

impl AspectRatio {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta <= 1.0 {
            Ok(Self(beta))
        } else {
            Err(Error::range("beta", beta, "0 < beta <= 1"))
        }
    }

    /// `min(n, m) / max(n, m)`, independent of orientation.
    pub fn of(shape: MatrixShape) -> Self {
        Self(shape.len() as f64 / shape.max_dim() as f64)
    }

    pub fn beta(&self) -> f64 {
        self.0
    }

    /// `1 - sqrt(beta)`.
    pub fn lower_edge(&self) -> f64 {
        1.0 - self.0.sqrt()
    }

    /// `1 + sqrt(beta)`.
    pub fn upper_edge(&self) -> f64 {
        1.0 + self.0.sqrt()
    }

    /// `beta^{1/4}`, the spike detection threshold.
    pub fn transition(&self) -> f64 {
        self.0.sqrt().sqrt()
    }
}

/// Limiting density of calibrated noise singular values.
pub fn quarter_circle_pdf(w: f64, beta: AspectRatio) -> f64 {
    let (lo, hi) = (beta.lower_edge(), beta.upper_edge());
    if w < lo || w > hi || w < 0.0 {
        return 0.0;
    }
    let b = beta.beta();
    if b == 1.0 {
        // Continuous extension at w = 0.
        return (4.0 - w * w).max(0.0).sqrt() / PI;
    }
    if w == 0.0 {
        return 0.0;
    }
    ((w * w - lo * lo) * (hi * hi - w * w)).max(0.0).sqrt() / (PI * b * w)
}

/// Cumulative distribution of [`quarter_circle_pdf`].
///
/// Integrates in `theta` with `w^2 = (a + b)/2 + (b - a)/2 cos(theta)`,
/// which turns the square-root endpoints into a smooth integrand.
pub fn quarter_circle_cdf(w: f64, beta: AspectRatio) -> f64 {
    let (lo, hi) = (beta.lower_edge(), beta.upper_edge());
    if w <= lo {
        return 0.0;
    }
    if w >= hi {
        return 1.0;
    }
    let (a, b) = (lo * lo, hi * hi);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let bb = beta.beta();
    let theta0 = ((w * w - mid) / half).clamp(-1.0, 1.0).acos();
    // lambda(theta) = mid + half cos(theta); density in lambda is
    // sqrt((lambda - a)(b - lambda)) / (2 pi beta lambda).
    let integrand = |t: f64| {
        let s = t.sin();
        let c = t.cos();
        // half^2 sin^2 / lambda; when a = 0 this simplifies to
        // half (1 - cos) and the 0/0 at theta = pi disappears.
        let ratio = if a == 0.0 {
            half * (1.0 - c)
        } else {
            half * half * s * s / (mid + half * c)
        };
        ratio / (2.0 * PI * bb)
    };
    simpson(integrand, theta0, PI, 2000).clamp(0.0, 1.0)
}

/// Composite Simpson rule with `panels` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    if n == 0 || a == b {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Asymptotic location of the observed singular value produced by a spike
/// of size `x`.
pub fn rho(x: f64, beta: AspectRatio) -> f64 {
    if x <= beta.transition() {
        return beta.upper_edge();
    }
    let b = beta.beta();
    ((x + 1.0 / x) * (x + b / x)).sqrt()
}

/// Limiting `|<u_i, u~_i>|`.
pub fn theta_u(x: f64, beta: AspectRatio) -> f64 {
    let b = beta.beta();
    if x <= beta.transition() {
        return 0.0;
    }
    let x2 = x * x;
    ((x2 * x2 - b) / (x2 * (x2 + b))).max(0.0).sqrt().min(1.0)
}

/// Limiting `|<v_i, v~_i>|`.
pub fn theta_v(x: f64, beta: AspectRatio) -> f64 {
    let b = beta.beta();
    if x <= beta.transition() {
        return 0.0;
    }
    let x2 = x * x;
    ((x2 * x2 - b) / (x2 * (x2 + 1.0))).max(0.0).sqrt().min(1.0)
}

/// Which dimension normalizes the noise onto the calibrated scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calibration {
    /// Divide by `sqrt(n) sigma` with `n` the row count.
    Rows,
    /// Divide by `sqrt(max(n, m)) sigma`.
    MaxDim,
}

impl Calibration {
    pub fn factor(&self, shape: MatrixShape, sigma: f64) -> f64 {
        let d = match self {
            Self::Rows => shape.n(),
            Self::MaxDim => shape.max_dim(),
        };
        (d as f64).sqrt() * sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankEstimate {
    pub r_star: usize,
    /// Bulk edge `1 + sqrt(beta)` used as the cut.
    pub threshold: f64,
}

/// Counts calibrated singular values strictly above the bulk edge.
pub fn estimate_rank(spectrum: &[f64], shape: MatrixShape, sigma: f64) -> Result<RankEstimate> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::range("sigma", sigma, "sigma > 0"));
    }
    let scale = Calibration::MaxDim.factor(shape, sigma);
    let threshold = AspectRatio::of(shape).upper_edge();
    let r_star = spectrum.iter().filter(|&&y| y / scale > threshold).count();
    Ok(RankEstimate { r_star, threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AsymptoticVariant {
    /// Optimal bulk shrinker.
    OptimalShrink,
    /// Hard threshold at `4 / sqrt(3)`.
    Svht4Sqrt3,
    /// Soft threshold at the bulk edge `1 + sqrt(beta)`.
    SvstBulk,
}

pub const SVHT_CALIBRATED_THRESHOLD: f64 = 2.309_401_076_758_503; // 4 / sqrt(3)

impl AsymptoticVariant {
    /// Rule on the calibrated scale.
    pub fn calibrated_rule(&self, beta: AspectRatio) -> ShrinkageRule {
        match self {
            Self::OptimalShrink => ShrinkageRule::RmtOptimal { beta: beta.beta() },
            Self::Svht4Sqrt3 => ShrinkageRule::Svht {
                mu: SVHT_CALIBRATED_THRESHOLD,
            },
            Self::SvstBulk => ShrinkageRule::Svst {
                lambda: beta.upper_edge(),
            },
        }
    }

    /// Shrunken spectrum at native scale.
    pub fn shrink(
        &self,
        spectrum: &[f64],
        shape: MatrixShape,
        sigma: f64,
        calibration: Calibration,
    ) -> Result<Vec<f64>> {
        let scale = calibration.factor(shape, sigma);
        let rule = self.calibrated_rule(AspectRatio::of(shape));
        let calibrated: Vec<f64> = spectrum.iter().map(|y| y / scale).collect();
        Ok(rule
            .apply(&calibrated)?
            .into_iter()
            .map(|v| v * scale)
            .collect())
    }
}

/// `sqrt(n) sigma * F(Y / (sqrt(n) sigma))` for the chosen asymptotic rule.
pub fn asymptotic_denoise(
    problem: &DenoiseProblem,
    factors: &SvdFactors,
    variant: AsymptoticVariant,
) -> Result<DMatrix<f64>> {
    asymptotic_denoise_with(problem, factors, variant, Calibration::Rows)
}

pub fn asymptotic_denoise_with(
    problem: &DenoiseProblem,
    factors: &SvdFactors,
    variant: AsymptoticVariant,
    calibration: Calibration,
) -> Result<DMatrix<f64>> {
    let shrunk = variant.shrink(
        factors.spectrum(),
        problem.shape(),
        problem.sigma(),
        calibration,
    )?;
    reconstruct(factors, &shrunk)
}

/// The optimal bulk shrinker written through the spike parameters:
/// `x theta_u(x) theta_v(x)` with `x` recovered from `y = rho(x)`.
pub fn optimal_shrink_via_spike(y: f64, beta: AspectRatio) -> f64 {
    if y <= beta.upper_edge() {
        return 0.0;
    }
    let b = beta.beta();
    let t = y * y - b - 1.0;
    let x2 = 0.5 * (t + (t * t - 4.0 * b).max(0.0).sqrt());
    let x = x2.sqrt();
    x * theta_u(x, beta) * theta_v(x, beta)
}

/// Re-export for callers that think of the optimal shrinker as an RMT law.
pub fn optimal_shrink(y: f64, beta: AspectRatio) -> f64 {
    optimal_bulk_shrink(y, beta.beta())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(b: f64) -> AspectRatio {
        AspectRatio::new(b).unwrap()
    }

    #[test]
    fn density_at_origin_for_square() {
        let f0 = quarter_circle_pdf(0.0, ratio(1.0));
        assert!((f0 - 2.0 / PI).abs() < 1e-15);
        // Limit from the right agrees.
        let near = quarter_circle_pdf(1e-8, ratio(1.0));
        assert!((near - f0).abs() < 1e-12);
    }

    #[test]
    fn density_vanishes_outside_support() {
        for b in [0.1, 0.5, 1.0] {
            let beta = ratio(b);
            assert_eq!(quarter_circle_pdf(beta.upper_edge() + 1e-9, beta), 0.0);
            assert_eq!(quarter_circle_pdf(5.0, beta), 0.0);
            if b < 1.0 {
                assert_eq!(quarter_circle_pdf(beta.lower_edge() * 0.5, beta), 0.0);
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let beta = ratio(1.0);
        let mass = simpson(|w| quarter_circle_pdf(w, beta), 0.0, 2.0, 10_000);
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn cdf_agrees_with_direct_quadrature() {
        for b in [0.25, 0.5, 1.0] {
            let beta = ratio(b);
            let lo = beta.lower_edge();
            for frac in [0.1, 0.3, 0.5, 0.8, 0.95] {
                let w = lo + frac * (beta.upper_edge() - lo);
                let direct = simpson(|t| quarter_circle_pdf(t, beta), lo, w, 200_000);
                let cdf = quarter_circle_cdf(w, beta);
                assert!(
                    (cdf - direct).abs() < 1e-4,
                    "beta={b} w={w}: {cdf} vs {direct}"
                );
            }
            assert_eq!(quarter_circle_cdf(beta.upper_edge(), beta), 1.0);
            assert_eq!(quarter_circle_cdf(lo, beta), 0.0);
        }
    }

    #[test]
    fn rho_examples() {
        assert!((rho(1.0, ratio(1.0)) - 2.0).abs() < 1e-15);
        assert!((rho(2.0, ratio(1.0)) - 2.5).abs() < 1e-15);
        let r = rho(10.0, ratio(0.5)) / 10.0;
        assert!((1.0..=1.02).contains(&r));
        assert_eq!(rho(0.5, ratio(1.0)), 2.0);
    }

    #[test]
    fn rho_is_increasing_above_transition() {
        for b in [0.25, 0.5, 1.0] {
            let beta = ratio(b);
            let start = beta.transition();
            let mut prev = rho(start, beta);
            for step in 1..2000 {
                let x = start + step as f64 * 0.005;
                let r = rho(x, beta);
                assert!(r > prev);
                assert!(r >= beta.upper_edge().max(x));
                prev = r;
            }
        }
    }

    #[test]
    fn overlaps_at_transition_and_large_spikes() {
        let beta = ratio(1.0);
        assert_eq!(theta_u(1.0, beta), 0.0);
        assert_eq!(theta_v(1.0, beta), 0.0);
        assert!(theta_u(100.0, beta) >= 0.9999);
        assert!(theta_v(100.0, beta) >= 0.9999);
    }

    #[test]
    fn overlap_identity_links_to_optimal_shrinker() {
        // x theta_u theta_v = eta*(rho(x)) on a deterministic scatter.
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut unit = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let b = 0.05 + 0.95 * unit();
            let beta = ratio(b);
            let x = beta.transition() * (1.0 + 1e-3) + 6.0 * unit();
            let lhs = x * theta_u(x, beta) * theta_v(x, beta);
            let rhs = optimal_bulk_shrink(rho(x, beta), b);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
                "x={x} beta={b}: {lhs} vs {rhs}"
            );
            let y = rho(x, beta);
            assert!((optimal_shrink_via_spike(y, beta) - rhs).abs() <= 1e-9 * rhs.max(1.0));
        }
    }

    #[test]
    fn rank_of_zero_spectrum() {
        let shape = MatrixShape::new(10, 10).unwrap();
        let r = estimate_rank(&[0.0; 10], shape, 1.0).unwrap();
        assert_eq!(r.r_star, 0);
        assert_eq!(r.threshold, 2.0);
    }

    #[test]
    fn aspect_ratio_orientation() {
        let a = AspectRatio::of(MatrixShape::new(20, 80).unwrap());
        let b = AspectRatio::of(MatrixShape::new(80, 20).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.beta(), 0.25);
        assert!(AspectRatio::new(0.0).is_err());
        assert!(AspectRatio::new(1.1).is_err());
    }

    #[test]
    fn calibrated_threshold_constant() {
        assert!((SVHT_CALIBRATED_THRESHOLD - 4.0 / 3f64.sqrt()).abs() < 1e-15);
    }
}
