use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rmt::{asymptotic_denoise, AsymptoticVariant};
use crate::spectral::{reconstruct, svd, truncate_factors, DenoiseProblem, SvdFactors};
use crate::sure::{solve_svlet_spectrum, tune_grid_spectrum, GridSpec, SureSettings, TuneFamily};

pub const DEFAULT_C: f64 = 10.0;
pub const DEFAULT_K: usize = 2;

/// A denoiser as benchmarked: rule family plus how its parameters are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Svlet {
        c: f64,
        k: usize,
    },
    SvstSure,
    AtnSure,
    SvltSure,
    OptimalShrink,
    Svht4Sqrt3,
    SvstBulk,
    /// Truncation at the true rank; needs the oracle rank of the cell.
    EymOracle,
}

impl Method {
    pub const ALL_NAMES: [&'static str; 8] = [
        "svlet",
        "svst-sure",
        "atn-sure",
        "svlt-sure",
        "opt-shrink",
        "svht-4sqrt3",
        "svst-bulk",
        "eym-oracle",
    ];

    /// Every method at its default settings, in table order.
    pub fn all() -> Vec<Method> {
        vec![
            Method::svlet_default(),
            Method::SvstSure,
            Method::AtnSure,
            Method::SvltSure,
            Method::OptimalShrink,
            Method::Svht4Sqrt3,
            Method::SvstBulk,
            Method::EymOracle,
        ]
    }

    pub fn svlet_default() -> Method {
        Method::Svlet {
            c: DEFAULT_C,
            k: DEFAULT_K,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Method::Svlet { c, k } = *self {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::range("C", c, "C > 0"));
            }
            if k == 0 {
                return Err(Error::range("K", 0.0, "K >= 1"));
            }
        }
        Ok(())
    }

    pub fn denoise(
        &self,
        problem: &DenoiseProblem,
        true_rank: usize,
        settings: &SureSettings,
    ) -> Result<DMatrix<f64>> {
        let factors = svd(problem.observed())?;
        self.denoise_factored(problem, &factors, true_rank, settings)
    }

    pub fn denoise_factored(
        &self,
        problem: &DenoiseProblem,
        factors: &SvdFactors,
        true_rank: usize,
        settings: &SureSettings,
    ) -> Result<DMatrix<f64>> {
        let spectrum = factors.spectrum();
        let (shape, sigma) = (problem.shape(), problem.sigma());
        let tuned = |family| -> Result<DMatrix<f64>> {
            let grid = GridSpec::default_for(family, spectrum);
            let report = tune_grid_spectrum(spectrum, shape, sigma, &grid, settings)?;
            reconstruct(factors, &report.rule.apply(spectrum)?)
        };
        match *self {
            Method::Svlet { c, k } => {
                let solve = solve_svlet_spectrum(spectrum, shape, sigma, k, c, settings)?;
                reconstruct(factors, &solve.rule.apply(spectrum)?)
            }
            Method::SvstSure => tuned(TuneFamily::Svst),
            Method::AtnSure => tuned(TuneFamily::Atn),
            Method::SvltSure => tuned(TuneFamily::Svlt),
            Method::OptimalShrink => {
                asymptotic_denoise(problem, factors, AsymptoticVariant::OptimalShrink)
            }
            Method::Svht4Sqrt3 => {
                asymptotic_denoise(problem, factors, AsymptoticVariant::Svht4Sqrt3)
            }
            Method::SvstBulk => asymptotic_denoise(problem, factors, AsymptoticVariant::SvstBulk),
            Method::EymOracle => Ok(truncate_factors(factors, true_rank)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Svlet { c, k } => write!(f, "svlet-c{c}-k{k}"),
            Method::SvstSure => f.write_str("svst-sure"),
            Method::AtnSure => f.write_str("atn-sure"),
            Method::SvltSure => f.write_str("svlt-sure"),
            Method::OptimalShrink => f.write_str("opt-shrink"),
            Method::Svht4Sqrt3 => f.write_str("svht-4sqrt3"),
            Method::SvstBulk => f.write_str("svst-bulk"),
            Method::EymOracle => f.write_str("eym-oracle"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts the display names plus bare `svlet` for the defaults.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let method = match s.as_str() {
            "svlet" => Method::svlet_default(),
            "svst-sure" => Method::SvstSure,
            "atn-sure" => Method::AtnSure,
            "svlt-sure" => Method::SvltSure,
            "opt-shrink" => Method::OptimalShrink,
            "svht-4sqrt3" => Method::Svht4Sqrt3,
            "svst-bulk" => Method::SvstBulk,
            "eym-oracle" => Method::EymOracle,
            other => {
                let parsed = other
                    .strip_prefix("svlet-c")
                    .and_then(|rest| rest.split_once("-k"))
                    .and_then(|(c, k)| Some((c.parse::<f64>().ok()?, k.parse::<usize>().ok()?)));
                match parsed {
                    Some((c, k)) => Method::Svlet { c, k },
                    None => {
                        return Err(Error::Contract(format!(
                            "unknown method {other:?}; expected one of {} or svlet-c<C>-k<K>",
                            Method::ALL_NAMES.join(", ")
                        )))
                    }
                }
            }
        };
        method.validate()?;
        Ok(method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Method::all()
            .into_iter()
            .chain([Method::Svlet { c: 2.5, k: 5 }])
        {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert_eq!("svlet".parse::<Method>().unwrap(), Method::svlet_default());
        assert!("svlet-c0-k2".parse::<Method>().is_err());
        assert!("wiener".parse::<Method>().is_err());
    }
}
