mod common;

use common::*;
use proptest::prelude::*;
use sigloc_core::flow::block_diag;
use sigloc_core::inertia::{self, default_zero_tol};
use sigloc_core::sparse::SparseMatrix;

fn tol_for(n: usize) -> f64 {
    default_zero_tol(n, 3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn factorization_matches_eigencount(seed in any::<u64>(), n in 1usize..60) {
        let h = gapped(&mut rng(seed), n, 0.05);
        let eig = inertia::inertia_eigen(&h, tol_for(n)).unwrap();
        let ldl = inertia::inertia_ldl(&SparseMatrix::from_dense(&h, 0.0)).unwrap();
        prop_assert!(ldl.same_counts(&eig));
        let sliced = inertia::inertia_sliced(&SparseMatrix::from_dense(&h, 0.0), tol_for(n)).unwrap();
        prop_assert!(sliced.same_counts(&eig));
    }

    #[test]
    fn sparse_and_dense_eliminations_agree(seed in any::<u64>(), n in 1usize..80) {
        let mut r = rng(seed);
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, c(if i % 3 == 0 { 0.0 } else { 2.0 * gaussian(&mut r).re })));
            for _ in 0..2 {
                let j = (i + 1 + (gaussian(&mut r).re.abs() * 5.0) as usize) % n;
                if j != i {
                    let v = gaussian(&mut r);
                    trips.push((i, j, v));
                    trips.push((j, i, v.conj()));
                }
            }
        }
        let h = SparseMatrix::from_triplets(n, n, trips);
        let dense = inertia::ldl_dense(&h.to_dense());
        let sparse = inertia::ldl_sparse(&h);
        if let (Ok(d), Ok(s)) = (dense, sparse) {
            let eig = inertia::inertia_eigen(&h.to_dense(), 1e-9).unwrap();
            if eig.n_zero == 0 {
                prop_assert!(d.inertia().same_counts(&eig));
                prop_assert!(s.inertia().same_counts(&eig));
            }
        }
    }

    #[test]
    fn direct_sum_adds(seed in any::<u64>(), n in 1usize..30, m in 1usize..30) {
        let mut r = rng(seed);
        let (a, b) = (gapped(&mut r, n, 0.1), gapped(&mut r, m, 0.1));
        let ia = inertia::inertia_ldl_dense(&a).unwrap();
        let ib = inertia::inertia_ldl_dense(&b).unwrap();
        let iab = inertia::inertia_ldl_dense(&block_diag(&a, &b)).unwrap();
        prop_assert_eq!(iab.n_plus, ia.n_plus + ib.n_plus);
        prop_assert_eq!(iab.n_minus, ia.n_minus + ib.n_minus);
    }

    #[test]
    fn unitary_invariance_and_negation(seed in any::<u64>(), n in 1usize..40) {
        let mut r = rng(seed);
        let h = gapped(&mut r, n, 0.1);
        let u = unitary(&mut r, n);
        let t = inertia::inertia_eigen(&h, tol_for(n)).unwrap();
        let rotated = inertia::inertia_ldl_dense(&symmetrize(&(u.adjoint() * &h * &u))).unwrap();
        prop_assert!(rotated.same_counts(&t));
        let neg = inertia::inertia_ldl_dense(&(-&h)).unwrap();
        prop_assert_eq!((neg.n_plus, neg.n_minus), (t.n_minus, t.n_plus));
    }

    #[test]
    fn sylvester_congruence(seed in any::<u64>(), n in 1usize..40) {
        let mut r = rng(seed);
        let t = gapped(&mut r, n, 0.1);
        let sv: Vec<f64> = (0..n).map(|i| 1.0 + 10.0 * (i as f64 / n as f64)).collect();
        let a = unitary(&mut r, n) * diag(&sv) * unitary(&mut r, n).adjoint();
        let rep = inertia::sylvester_check(&t, &a).unwrap();
        prop_assert!(rep.equal);
    }

    #[test]
    fn solve_inverts(seed in any::<u64>(), n in 1usize..40) {
        let mut r = rng(seed);
        let h = gapped(&mut r, n, 0.2);
        let f = inertia::ldl_factor(&SparseMatrix::from_dense(&h, 0.0)).unwrap();
        let b: Vec<_> = (0..n).map(|_| gaussian(&mut r)).collect();
        let x = f.solve(&b);
        let hx = &h * nalgebra::DVector::from_vec(x);
        let err = hx.iter().zip(&b).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8, "residual {}", err);
    }

    #[test]
    fn interval_counts_partition(seed in any::<u64>(), n in 1usize..40) {
        let h = SparseMatrix::from_dense(&gapped(&mut rng(seed), n, 0.1), 0.0);
        let lo = inertia::count_in_interval(&h, -10.0, 0.0).unwrap();
        let hi = inertia::count_in_interval(&h, 0.0, 10.0).unwrap();
        prop_assert_eq!(lo + hi, n);
    }
}

#[test]
fn singular_input_has_zero_count_under_slicing() {
    let h = SparseMatrix::from_dense(&diag(&[2.0, 0.0, -1.0, 0.0]), 0.0);
    let t = inertia::inertia_sliced(&h, 1e-9).unwrap();
    assert_eq!((t.n_plus, t.n_zero, t.n_minus), (1, 2, 1));
}
