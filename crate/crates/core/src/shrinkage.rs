//! Point-wise singular value shrinkage rules and their analytic derivatives.
//!
//! A rule maps the observed spectrum `y_1 >= ... >= y_L` to shrunken values
//! `eta(y_i)`. SVLT additionally depends on the 1-based position `i`; every
//! other rule ignores it. Derivatives are taken in `y` at fixed position.
//!
//! Thresholded rules use the right-derivative at the threshold point itself.

use std::fmt;

use crate::error::{Error, Result};

/// Largest ATN exponent accepted; `y^gamma` overflows soon after.
pub const MAX_ATN_GAMMA: f64 = 64.0;

/// Derivative-of-Gaussian expansion `eta(y) = sum_k a_k phi_k(y)` with
/// `phi_k(y) = y exp(-(k-1) y^2 / (2 T^2))` and `T = C sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvletBasis {
    order: usize,
    scale: f64,
    c: f64,
    coeffs: Vec<f64>,
}

impl SvletBasis {
    /// Basis of order `order` with scale `T = c * sigma` and all
    /// coefficients zero.
    pub fn new(order: usize, c: f64, sigma: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::range("K", 0.0, "K >= 1"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::range("C", c, "C > 0"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::range("sigma", sigma, "sigma > 0"));
        }
        let scale = c * sigma;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::range("T", scale, "T = C * sigma > 0"));
        }
        Ok(Self {
            order,
            scale,
            c,
            coeffs: vec![0.0; order],
        })
    }

    pub fn with_coefficients(mut self, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != self.order {
            return Err(Error::Dimension {
                expected: format!("{} coefficients", self.order),
                found: coeffs.len().to_string(),
            });
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::Contract("SVLET coefficients must be finite".into()));
        }
        self.coeffs = coeffs;
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `T`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `C`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `phi_k(y)` for `k` in `1..=K`.
    pub fn phi(&self, k: usize, y: f64) -> f64 {
        y * self.gauss(k, y)
    }

    /// `phi_k'(y) = (1 - (k-1) y^2 / T^2) exp(-(k-1) y^2 / (2 T^2))`.
    pub fn dphi(&self, k: usize, y: f64) -> f64 {
        let q = (k - 1) as f64 * y * y / (self.scale * self.scale);
        (1.0 - q) * self.gauss(k, y)
    }

    fn gauss(&self, k: usize, y: f64) -> f64 {
        debug_assert!(k >= 1 && k <= self.order);
        if k == 1 {
            return 1.0;
        }
        let t = y / self.scale;
        (-((k - 1) as f64) * 0.5 * t * t).exp()
    }

    /// Unclamped `sum_k a_k phi_k(y)`.
    pub fn raw(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, a)| a * self.phi(idx + 1, y))
            .sum()
    }

    pub fn raw_derivative(&self, y: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, a)| a * self.dphi(idx + 1, y))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShrinkageRule {
    Identity,
    Zero,
    /// Hard threshold: `y 1(y > mu)`.
    Svht {
        mu: f64,
    },
    /// Soft threshold: `(y - lambda)_+`.
    Svst {
        lambda: f64,
    },
    /// Adaptive trace norm: `y (1 - tau^gamma / y^gamma)_+`.
    Atn {
        tau: f64,
        gamma: f64,
    },
    /// Logistic-weighted soft threshold: `(y / (1 + e^{p1 (i - p2)}) - p3)_+`.
    Svlt {
        p1: f64,
        p2: f64,
        p3: f64,
    },
    Svlet(SvletBasis),
    /// Optimal bulk shrinker at aspect ratio `beta`, on the calibrated scale
    /// where the noise bulk ends at `1 + sqrt(beta)`.
    RmtOptimal {
        beta: f64,
    },
}

impl ShrinkageRule {
    pub fn svht(mu: f64) -> Result<Self> {
        let rule = Self::Svht { mu };
        rule.validate()?;
        Ok(rule)
    }

    pub fn svst(lambda: f64) -> Result<Self> {
        let rule = Self::Svst { lambda };
        rule.validate()?;
        Ok(rule)
    }

    pub fn atn(tau: f64, gamma: f64) -> Result<Self> {
        let rule = Self::Atn { tau, gamma };
        rule.validate()?;
        Ok(rule)
    }

    pub fn svlt(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let rule = Self::Svlt { p1, p2, p3 };
        rule.validate()?;
        Ok(rule)
    }

    pub fn rmt_optimal(beta: f64) -> Result<Self> {
        let rule = Self::RmtOptimal { beta };
        rule.validate()?;
        Ok(rule)
    }

    /// Checks the parameter ranges of the variant.
    pub fn validate(&self) -> Result<()> {
        let finite = |what, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::range(what, v, "finite"))
            }
        };
        match *self {
            Self::Identity | Self::Zero => Ok(()),
            Self::Svht { mu } => {
                finite("mu", mu)?;
                (mu > 0.0)
                    .then_some(())
                    .ok_or(Error::range("mu", mu, "mu > 0"))
            }
            Self::Svst { lambda } => {
                finite("lambda", lambda)?;
                (lambda >= 0.0)
                    .then_some(())
                    .ok_or(Error::range("lambda", lambda, "lambda >= 0"))
            }
            Self::Atn { tau, gamma } => {
                finite("tau", tau)?;
                if tau <= 0.0 {
                    return Err(Error::range("tau", tau, "tau > 0"));
                }
                if !(1.0..=MAX_ATN_GAMMA).contains(&gamma) {
                    return Err(Error::range("gamma", gamma, "1 <= gamma <= 64"));
                }
                Ok(())
            }
            Self::Svlt { p1, p2, p3 } => {
                finite("p1", p1)?;
                finite("p2", p2)?;
                finite("p3", p3)?;
                if p1 < 0.0 {
                    return Err(Error::range("p1", p1, "p1 >= 0"));
                }
                if p2 < 1.0 {
                    return Err(Error::range("p2", p2, "1 <= p2 <= L"));
                }
                if p3 < 0.0 {
                    return Err(Error::range("p3", p3, "p3 >= 0"));
                }
                Ok(())
            }
            Self::Svlet(ref basis) => {
                if basis.coeffs.iter().all(|a| a.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Contract("SVLET coefficients must be finite".into()))
                }
            }
            Self::RmtOptimal { beta } => {
                if beta > 0.0 && beta <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::range("beta", beta, "0 < beta <= 1"))
                }
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Zero => "zero",
            Self::Svht { .. } => "svht",
            Self::Svst { .. } => "svst",
            Self::Atn { .. } => "atn",
            Self::Svlt { .. } => "svlt",
            Self::Svlet(_) => "svlet",
            Self::RmtOptimal { .. } => "rmt-optimal",
        }
    }

    /// Named parameters, in the order used for grid tie-breaking.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self {
            Self::Identity | Self::Zero => vec![],
            Self::Svht { mu } => vec![("mu", *mu)],
            Self::Svst { lambda } => vec![("lambda", *lambda)],
            Self::Atn { tau, gamma } => vec![("tau", *tau), ("gamma", *gamma)],
            Self::Svlt { p1, p2, p3 } => vec![("p1", *p1), ("p2", *p2), ("p3", *p3)],
            Self::Svlet(b) => {
                let mut p = vec![("K", b.order as f64), ("C", b.c), ("T", b.scale)];
                p.extend(b.coeffs.iter().map(|&a| ("a", a)));
                p
            }
            Self::RmtOptimal { beta } => vec![("beta", *beta)],
        }
    }

    /// `eta(y)` at 0-based position `index`, clamped to be non-negative.
    pub fn value(&self, y: f64, index: usize) -> f64 {
        match self {
            Self::Svlet(b) => b.raw(y).max(0.0),
            _ => self.raw_value(y, index),
        }
    }

    /// `eta(y)` without the SVLET clamp. Identical to [`Self::value`] for
    /// every other rule. SURE is evaluated on this form.
    pub fn raw_value(&self, y: f64, index: usize) -> f64 {
        match *self {
            Self::Identity => y,
            Self::Zero => 0.0,
            Self::Svht { mu } => {
                if y > mu {
                    y
                } else {
                    0.0
                }
            }
            Self::Svst { lambda } => (y - lambda).max(0.0),
            Self::Atn { tau, gamma } => {
                if gamma == 1.0 {
                    (y - tau).max(0.0)
                } else if y <= 0.0 {
                    0.0
                } else {
                    y * (1.0 - atn_power(tau / y, gamma)).max(0.0)
                }
            }
            Self::Svlt { p1, p2, p3 } => (y * logistic_weight(p1, p2, index) - p3).max(0.0),
            Self::Svlet(ref b) => b.raw(y),
            Self::RmtOptimal { beta } => optimal_bulk_shrink(y, beta),
        }
    }

    /// `d eta / d y` at fixed position, matching [`Self::value`]; zero
    /// inside the SVLET clamp region.
    pub fn derivative(&self, y: f64, index: usize) -> f64 {
        match self {
            Self::Svlet(b) => {
                let raw = b.raw(y);
                let d = b.raw_derivative(y);
                if raw > 0.0 || (raw == 0.0 && d > 0.0) {
                    d
                } else {
                    0.0
                }
            }
            _ => self.raw_derivative(y, index),
        }
    }

    /// Derivative of [`Self::raw_value`].
    pub fn raw_derivative(&self, y: f64, index: usize) -> f64 {
        match *self {
            Self::Identity => 1.0,
            Self::Zero => 0.0,
            Self::Svht { mu } => {
                if y >= mu {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Svst { lambda } => {
                if y >= lambda {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Atn { tau, gamma } => {
                if y >= tau {
                    1.0 + (gamma - 1.0) * atn_power(tau / y, gamma)
                } else {
                    0.0
                }
            }
            Self::Svlt { p1, p2, p3 } => {
                let w = logistic_weight(p1, p2, index);
                if w > 0.0 && y * w >= p3 {
                    w
                } else {
                    0.0
                }
            }
            Self::Svlet(ref b) => b.raw_derivative(y),
            Self::RmtOptimal { beta } => optimal_bulk_shrink_derivative(y, beta),
        }
    }

    /// `(raw_value, raw_derivative)` with shared terms evaluated once.
    pub fn raw_value_and_derivative(&self, y: f64, index: usize) -> (f64, f64) {
        match *self {
            Self::Atn { tau, gamma } if gamma != 1.0 => {
                if y < tau || y <= 0.0 {
                    return (0.0, 0.0);
                }
                let q = atn_power(tau / y, gamma);
                (y * (1.0 - q).max(0.0), 1.0 + (gamma - 1.0) * q)
            }
            Self::Svlt { p1, p2, p3 } => {
                let w = logistic_weight(p1, p2, index);
                let d = if w > 0.0 && y * w >= p3 { w } else { 0.0 };
                ((y * w - p3).max(0.0), d)
            }
            _ => (self.raw_value(y, index), self.raw_derivative(y, index)),
        }
    }

    /// Shrinks a descending, non-negative spectrum.
    pub fn apply(&self, spectrum: &[f64]) -> Result<Vec<f64>> {
        self.check_input(spectrum)?;
        Ok(spectrum
            .iter()
            .enumerate()
            .map(|(i, &y)| self.value(y, i))
            .collect())
    }

    /// Like [`Self::apply`] but without the SVLET clamp.
    pub fn apply_raw(&self, spectrum: &[f64]) -> Result<Vec<f64>> {
        self.check_input(spectrum)?;
        Ok(spectrum
            .iter()
            .enumerate()
            .map(|(i, &y)| self.raw_value(y, i))
            .collect())
    }

    pub(crate) fn check_input(&self, spectrum: &[f64]) -> Result<()> {
        self.validate()?;
        check_spectrum(spectrum)?;
        if let Self::Svlt { p2, .. } = *self {
            if p2 > spectrum.len() as f64 {
                return Err(Error::range("p2", p2, "1 <= p2 <= L"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ShrinkageRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family())?;
        let params = self.params();
        if !params.is_empty() {
            let parts: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", parts.join(", "))?;
        }
        Ok(())
    }
}

/// Rejects spectra that are not finite, non-negative and descending.
pub fn check_spectrum(spectrum: &[f64]) -> Result<()> {
    for (i, &y) in spectrum.iter().enumerate() {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::Contract(format!(
                "spectrum entry {i} is {y}; expected finite and >= 0"
            )));
        }
        if i > 0 && y > spectrum[i - 1] {
            return Err(Error::Contract(format!(
                "spectrum is not descending at index {i} ({} < {y})",
                spectrum[i - 1]
            )));
        }
    }
    Ok(())
}

/// `1 / (1 + e^{p1 (i - p2)})` with `i = index + 1`.
/// `ratio^gamma`; integral exponents (the default tuning grid) use `powi`.
fn atn_power(ratio: f64, gamma: f64) -> f64 {
    if gamma.fract() == 0.0 {
        ratio.powi(gamma as i32)
    } else {
        ratio.powf(gamma)
    }
}

fn logistic_weight(p1: f64, p2: f64, index: usize) -> f64 {
    let z = p1 * ((index + 1) as f64 - p2);
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `sqrt((y^2 - beta - 1)^2 - 4 beta) / y` above the bulk edge, else 0.
pub fn optimal_bulk_shrink(y: f64, beta: f64) -> f64 {
    if y <= 1.0 + beta.sqrt() {
        return 0.0;
    }
    let b = y * y - beta - 1.0;
    (b * b - 4.0 * beta).max(0.0).sqrt() / y
}

/// Derivative of [`optimal_bulk_shrink`]. The right-derivative at the edge
/// is unbounded; the edge itself belongs to the zero branch and reports 0.
pub fn optimal_bulk_shrink_derivative(y: f64, beta: f64) -> f64 {
    if y <= 1.0 + beta.sqrt() {
        return 0.0;
    }
    let b = y * y - beta - 1.0;
    let g = b * b - 4.0 * beta;
    if g <= 0.0 {
        return 0.0;
    }
    let root = g.sqrt();
    2.0 * b / root - root / (y * y)
}
