mod common;

use common::random_matrix;
use proptest::prelude::*;
use svlet_core::spectral::{eym_truncate, svd, RECONSTRUCTION_TOL};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn factor_invariants_hold(n in 1usize..=200, m in 1usize..=200, seed in any::<u64>()) {
        let y = random_matrix(n, m, seed);
        let f = svd(&y).unwrap();
        let l = n.min(m);
        prop_assert_eq!(f.u.shape(), (n, l));
        prop_assert_eq!(f.v.shape(), (m, l));
        prop_assert!(f.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.s.iter().all(|&s| s >= 0.0));
        let err = f.invariant_error(&y);
        prop_assert!(err <= RECONSTRUCTION_TOL, "{n}x{m}: {err:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factorization_is_bitwise_repeatable(n in 1usize..60, m in 1usize..60, seed in any::<u64>()) {
        let y = random_matrix(n, m, seed);
        prop_assert_eq!(svd(&y).unwrap(), svd(&y).unwrap());
    }

    #[test]
    fn truncation_residual_is_tail_energy(n in 2usize..40, m in 2usize..40, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let y = random_matrix(n, m, seed);
        let l = n.min(m);
        let r = ((l as f64) * frac) as usize;
        let s = svd(&y).unwrap().s;
        let tail = s.iter().skip(r).map(|v| v * v).sum::<f64>().sqrt();
        let resid = (eym_truncate(&y, r).unwrap() - &y).norm();
        if tail > 0.0 {
            prop_assert!((resid - tail).abs() <= 1e-8 * tail, "{resid} vs {tail}");
        } else {
            prop_assert!(resid <= 1e-10 * y.norm());
        }
    }
}
