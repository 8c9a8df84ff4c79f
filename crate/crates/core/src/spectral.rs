//! Thin SVD with a canonical sign convention, spectral synthesis and
//! Eckart–Young truncation.
//!
//! Everything downstream works on [`SvdFactors`]: the shrinkage rules only
//! touch the singular values, and [`reconstruct`] pairs the new values with
//! the original singular-vector pairs.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Relative Frobenius tolerance for `U diag(S) V^T == Y` and for the
/// orthonormality of `U` and `V`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Iteration budget per singular value for the implicit-shift QR sweep.
const SVD_ITERATIONS_PER_VALUE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatrixShape {
    n: usize,
    m: usize,
}

impl MatrixShape {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Dimension {
                expected: "at least 1x1".into(),
                found: format!("{n}x{m}"),
            });
        }
        Ok(Self { n, m })
    }

    pub fn of(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.nrows(), matrix.ncols())
    }

    /// Row count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Column count.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of singular values, `min(n, m)`.
    pub fn len(&self) -> usize {
        self.n.min(self.m)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_dim(&self) -> usize {
        self.n.max(self.m)
    }

    /// `|n - m|`, the multiplicity of the `eta(y)/y` divergence term.
    pub fn dim_gap(&self) -> usize {
        self.n.abs_diff(self.m)
    }

    /// `n * m` as a float.
    pub fn entries(&self) -> f64 {
        self.n as f64 * self.m as f64
    }
}

impl std::fmt::Display for MatrixShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.n, self.m)
    }
}

/// Thin singular value decomposition `Y = U diag(S) V^T`.
///
/// `u` is `n x L`, `v` is `m x L` and `s` is descending. The sign of each
/// singular pair is fixed so that the largest-magnitude entry of every left
/// vector is non-negative (ties go to the lowest row index).
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn shape(&self) -> MatrixShape {
        MatrixShape {
            n: self.u.nrows(),
            m: self.v.nrows(),
        }
    }

    pub fn spectrum(&self) -> &[f64] {
        self.s.as_slice()
    }

    /// Largest of the three invariant errors: `||U^T U - I||_F`,
    /// `||V^T V - I||_F` and `||U diag(S) V^T - Y||_F / ||Y||_F`
    /// (absolute when `Y = 0`).
    pub fn invariant_error(&self, y: &DMatrix<f64>) -> f64 {
        let l = self.s.len();
        let eye = DMatrix::<f64>::identity(l, l);
        let ortho_u = (self.u.transpose() * &self.u - &eye).norm();
        let ortho_v = (self.v.transpose() * &self.v - &eye).norm();
        let recon = synthesize(&self.u, self.s.as_slice(), &self.v);
        let scale = y.norm();
        let recon_err = (recon - y).norm() / if scale > 0.0 { scale } else { 1.0 };
        ortho_u.max(ortho_v).max(recon_err)
    }

    pub fn verify(&self, y: &DMatrix<f64>, tol: f64) -> Result<()> {
        let err = self.invariant_error(y);
        if err <= tol && self.s.iter().all(|&v| v >= 0.0) {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "SVD invariants violated: error {err:e} exceeds {tol:e}"
            )))
        }
    }
}

fn ensure_finite(y: &DMatrix<f64>) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % y.nrows(), pos / y.nrows());
        return Err(Error::Contract(format!("non-finite entry at ({r}, {c})")));
    }
    Ok(())
}

fn decompose(y: &DMatrix<f64>, vectors: bool) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    ensure_finite(y)?;
    let budget = SVD_ITERATIONS_PER_VALUE * y.nrows().min(y.ncols()).max(1);
    SVD::try_new(y.clone(), vectors, vectors, f64::EPSILON, budget).ok_or(
        Error::FactorizationFailed {
            rows: y.nrows(),
            cols: y.ncols(),
        },
    )
}

/// Thin SVD of `y` with the canonical sign convention.
pub fn svd(y: &DMatrix<f64>) -> Result<SvdFactors> {
    let dec = decompose(y, true)?;
    let failed = || Error::FactorizationFailed {
        rows: y.nrows(),
        cols: y.ncols(),
    };
    let mut u = dec.u.ok_or_else(failed)?;
    let mut v = dec.v_t.ok_or_else(failed)?.transpose();
    let s = dec.singular_values;
    if s.iter().any(|v| !v.is_finite()) || u.iter().any(|v| !v.is_finite()) {
        return Err(failed());
    }

    for col in 0..s.len() {
        let mut pivot = 0;
        let mut best = -1.0;
        for (row, value) in u.column(col).iter().enumerate() {
            if value.abs() > best {
                best = value.abs();
                pivot = row;
            }
        }
        if u[(pivot, col)] < 0.0 {
            u.column_mut(col).neg_mut();
            v.column_mut(col).neg_mut();
        }
    }

    Ok(SvdFactors { u, s, v })
}

/// Singular values only, descending. Cheaper than [`svd`] when the vectors
/// are not needed (SURE and the SVLET solve depend on the spectrum alone).
pub fn singular_values(y: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dec = decompose(y, false)?;
    let s: Vec<f64> = dec.singular_values.iter().copied().collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::FactorizationFailed {
            rows: y.nrows(),
            cols: y.ncols(),
        });
    }
    Ok(s)
}

fn synthesize(u: &DMatrix<f64>, s: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut scaled = u.clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(s) {
        col *= w;
    }
    scaled * v.transpose()
}

/// `sum_i s_new[i] * u_i * v_i^T`.
pub fn reconstruct(factors: &SvdFactors, s_new: &[f64]) -> Result<DMatrix<f64>> {
    let l = factors.s.len();
    if s_new.len() != l {
        return Err(Error::Dimension {
            expected: format!("{l} singular values"),
            found: format!("{}", s_new.len()),
        });
    }
    if let Some(i) = s_new.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Contract(format!(
            "shrunken singular value {i} is {} (must be finite and >= 0)",
            s_new[i]
        )));
    }
    Ok(synthesize(&factors.u, s_new, &factors.v))
}

/// Like [`reconstruct`] but accepts negative values, for estimators such as
/// unclamped SVLET whose risk is being measured rather than used.
pub fn reconstruct_signed(factors: &SvdFactors, values: &[f64]) -> Result<DMatrix<f64>> {
    if values.len() != factors.s.len() {
        return Err(Error::Dimension {
            expected: format!("{} singular values", factors.s.len()),
            found: format!("{}", values.len()),
        });
    }
    Ok(synthesize(&factors.u, values, &factors.v))
}

/// Best rank-`r` approximation: the top `r` singular triplets of `y`.
pub fn eym_truncate(y: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let l = y.nrows().min(y.ncols());
    if r > l {
        return Err(Error::range("rank", r as f64, "0 <= r <= min(n, m)"));
    }
    let factors = svd(y)?;
    Ok(truncate_factors(&factors, r))
}

/// Truncation on precomputed factors; `r` is clamped to `L`.
pub fn truncate_factors(factors: &SvdFactors, r: usize) -> DMatrix<f64> {
    let r = r.min(factors.s.len());
    let u = factors.u.columns(0, r).into_owned();
    let v = factors.v.columns(0, r).into_owned();
    synthesize(&u, &factors.s.as_slice()[..r], &v)
}

/// Observed matrix plus its known noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseProblem {
    y: DMatrix<f64>,
    sigma: f64,
    shape: MatrixShape,
}

impl DenoiseProblem {
    pub fn new(y: DMatrix<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::range("sigma", sigma, "sigma > 0"));
        }
        ensure_finite(&y)?;
        let shape = MatrixShape::of(&y)?;
        Ok(Self { y, sigma, shape })
    }

    pub fn observed(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn shape(&self) -> MatrixShape {
        self.shape
    }

    pub fn into_observed(self) -> DMatrix<f64> {
        self.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(n: usize, m: usize, mut state: u64) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn diagonal_matrix_factors_trivially() {
        let y = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let f = svd(&y).unwrap();
        assert_eq!(f.spectrum(), &[3.0, 1.0]);
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((&f.u - &eye).norm() < 1e-14);
        assert!((&f.v - &eye).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let y = DMatrix::<f64>::zeros(3, 2);
        let f = svd(&y).unwrap();
        assert_eq!(f.s.len(), 2);
        assert!(f.s.iter().all(|&v| v == 0.0));
        f.verify(&y, RECONSTRUCTION_TOL).unwrap();
    }

    #[test]
    fn random_square_reconstructs() {
        let y = lcg_matrix(50, 50, 7);
        let f = svd(&y).unwrap();
        f.verify(&y, RECONSTRUCTION_TOL).unwrap();
        let direct = &f.u * DMatrix::from_diagonal(&f.s) * f.v.transpose();
        assert!((direct - &y).norm() / y.norm() < 1e-10);
    }

    #[test]
    fn wide_and_tall_shapes() {
        for (n, m) in [(3, 8), (8, 3), (1, 5), (5, 1)] {
            let y = lcg_matrix(n, m, (n * 31 + m) as u64);
            let f = svd(&y).unwrap();
            assert_eq!(f.u.shape(), (n, n.min(m)));
            assert_eq!(f.v.shape(), (m, n.min(m)));
            f.verify(&y, RECONSTRUCTION_TOL).unwrap();
        }
    }

    #[test]
    fn sign_convention_makes_largest_entry_non_negative() {
        let y = lcg_matrix(12, 9, 99);
        let f = svd(&y).unwrap();
        for col in f.u.column_iter() {
            let (mut pivot, mut best) = (0, -1.0);
            for (r, v) in col.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    pivot = r;
                }
            }
            assert!(col[pivot] >= 0.0);
        }
        let again = svd(&y).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut y = lcg_matrix(3, 3, 1);
        y[(1, 2)] = f64::NAN;
        assert!(matches!(svd(&y), Err(Error::Contract(_))));
    }

    #[test]
    fn reconstruct_identity_and_zero() {
        let y = lcg_matrix(6, 4, 3);
        let f = svd(&y).unwrap();
        let same = reconstruct(&f, f.spectrum()).unwrap();
        assert!((same - &y).norm() / y.norm() < 1e-10);
        let zero = reconstruct(&f, &[0.0; 4]).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn reconstruct_checks_length_and_sign() {
        let f = svd(&lcg_matrix(4, 4, 5)).unwrap();
        assert!(matches!(
            reconstruct(&f, &[1.0; 3]),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            reconstruct(&f, &[1.0, -1.0, 0.0, 0.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn truncated_reconstruct_matches_eym() {
        let y = lcg_matrix(10, 7, 11);
        let f = svd(&y).unwrap();
        let mut s = f.spectrum().to_vec();
        s[3..].iter_mut().for_each(|v| *v = 0.0);
        let a = reconstruct(&f, &s).unwrap();
        let b = eym_truncate(&y, 3).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn eym_edge_ranks() {
        let y = lcg_matrix(5, 6, 13);
        assert!((eym_truncate(&y, 5).unwrap() - &y).norm() / y.norm() < 1e-10);
        assert_eq!(eym_truncate(&y, 0).unwrap().norm(), 0.0);
        assert!(matches!(eym_truncate(&y, 6), Err(Error::Range { .. })));
    }

    #[test]
    fn eym_residual_is_tail_energy() {
        let y = lcg_matrix(20, 20, 17);
        let s = singular_values(&y).unwrap();
        let tail: f64 = s[3..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = (eym_truncate(&y, 3).unwrap() - &y).norm();
        assert!((err - tail).abs() / tail < 1e-10);
    }

    #[test]
    fn problem_validation() {
        let y = lcg_matrix(3, 3, 2);
        assert!(DenoiseProblem::new(y.clone(), 0.0).is_err());
        assert!(DenoiseProblem::new(y.clone(), f64::NAN).is_err());
        let p = DenoiseProblem::new(y, 0.5).unwrap();
        assert_eq!(p.shape().len(), 3);
        assert!(MatrixShape::new(0, 3).is_err());
    }
}
