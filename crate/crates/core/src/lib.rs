//! Singular value shrinkage for matrix denoising under white Gaussian noise.
//!
//! The centerpiece is SVLET: a shrinkage function written as a linear
//! combination of derivative-of-Gaussian bases whose coefficients minimize
//! Stein's unbiased risk estimate in closed form (a `K x K` linear solve).
//! Classical rules (hard/soft thresholding, adaptive trace norm, logistic
//! thresholding) are tuned by exhaustive SURE grid search, and the
//! random-matrix optimal bulk shrinker is available for comparison.
//!
//! ```
//! use svlet_core::{denoise_svlet, DenoiseProblem};
//! use nalgebra::DMatrix;
//!
//! let mut state = 1u64;
//! let y = DMatrix::from_fn(8, 6, |_, _| {
//!     state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
//!     (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
//! });
//! let problem = DenoiseProblem::new(y, 0.1).unwrap();
//! let (estimate, solve) = denoise_svlet(&problem, 2, 10.0).unwrap();
//! assert_eq!(estimate.shape(), (8, 6));
//! assert_eq!(solve.coefficients().len(), 2);
//! ```

pub mod error;
pub mod harness;
pub mod io;
pub mod rmt;
pub mod shrinkage;
pub mod spectral;
pub mod sure;

pub use nalgebra::DMatrix;

pub use error::{Error, Result};
pub use rmt::{AspectRatio, AsymptoticVariant, Calibration, RankEstimate};
pub use shrinkage::{ShrinkageRule, SvletBasis};
pub use spectral::{DenoiseProblem, MatrixShape, SvdFactors};
pub use sure::{GridSpec, LinearSystem, SureReport, SureSettings, SvletSolve, TuneFamily};

/// Solves for the SURE-optimal SVLET coefficients and applies the rule.
pub fn denoise_svlet(
    problem: &DenoiseProblem,
    order: usize,
    c: f64,
) -> Result<(DMatrix<f64>, SvletSolve)> {
    let factors = spectral::svd(problem.observed())?;
    let solve = sure::solve_svlet(problem, &factors, order, c)?;
    let shrunk = solve.rule.apply(factors.spectrum())?;
    Ok((spectral::reconstruct(&factors, &shrunk)?, solve))
}
