mod common;

use common::{gaussian, oracle_sigma, oracle_two_norm, random_orthogonal, random_orthonormal, rel, with_spectrum};
use proptest::prelude::*;
use stsvd::kernels::{householder_qr, jacobi_svd, pinv_apply, polar_factors, power_spectral_norm, spectral_norm};
use stsvd::Dense;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn qr_reconstructs_and_is_orthonormal(n in 1usize..=100, extra in 0usize..=400, seed: u64) {
        let m = n + extra;
        let x = gaussian(m, n, seed);
        let (q, r) = householder_qr(&x).unwrap();
        prop_assert!((&q * &r - &x).norm() <= 1e-13 * x.norm() * (n as f64).sqrt());
        prop_assert!((q.tr_mul(&q) - Dense::identity(n, n)).norm() <= 1e-13 * (n as f64));
        for i in 0..n {
            prop_assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                prop_assert_eq!(r[(i, j)], 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn svd_matches_bidiagonal_oracle(seed: u64) {
        let x = gaussian(50, 20, seed);
        let f = jacobi_svd(&x).unwrap();
        let want = oracle_sigma(&x);
        for (a, b) in f.sigma.iter().zip(&want) {
            prop_assert!(rel(*a, *b) <= 1e-12);
        }
        // X Y = U Σ
        let lhs = &x * &f.v;
        let mut us = f.u.clone();
        for (j, s) in f.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        prop_assert!((lhs - us).amax() <= 1e-12 * f.sigma[0]);
        prop_assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn polar_factors_reconstruct(m in 1usize..40, n in 1usize..12, seed: u64) {
        prop_assume!(m >= n);
        let x = gaussian(m, n, seed);
        let pp = polar_factors(&x).unwrap();
        let xn = oracle_two_norm(&x);
        prop_assert!(oracle_two_norm(&(&pp.p * &pp.h - &x)) <= 1e-12 * xn);
        prop_assert!((pp.p.tr_mul(&pp.p) - Dense::identity(n, n)).amax() <= 1e-12);
        prop_assert_eq!(pp.h.clone(), pp.h.transpose());
        let min_eig = pp.h.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-12 * xn);
    }

    #[test]
    fn pinv_satisfies_penrose_identity(rank in 1usize..5, seed: u64) {
        let x = gaussian(9, rank, seed) * gaussian(rank, 7, seed ^ 3);
        let xp = pinv_apply(&x, &Dense::identity(9, 9), None).unwrap();
        let xn = oracle_two_norm(&x);
        prop_assert!(oracle_two_norm(&(&x * &xp * &x - &x)) <= 1e-10 * xn);
        prop_assert!(oracle_two_norm(&(&xp * &x * &xp - &xp)) <= 1e-10 * oracle_two_norm(&xp));
    }
}

#[test]
fn pinv_matches_independent_composition() {
    let x = gaussian(5, 2, 8) * gaussian(2, 4, 9);
    let b = gaussian(5, 3, 10);
    let got = pinv_apply(&x, &b, None).unwrap();
    let oracle = x.clone().pseudo_inverse(1e-10 * oracle_two_norm(&x)).unwrap() * &b;
    assert!((got - &oracle).amax() <= 1e-10 * oracle.amax());
}

/// Exact inverse of the order-`n` Hilbert matrix; every entry is an integer
/// below 2^53 for `n <= 8`, so it is exact in f64.
fn inverse_hilbert(n: usize) -> Dense {
    fn binom(n: i128, k: i128) -> i128 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
    let nn = n as i128;
    Dense::from_fn(n, n, |i, j| {
        let (i, j) = (i as i128 + 1, j as i128 + 1);
        let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
        let v = sign
            * (i + j - 1)
            * binom(nn + i - 1, nn - j)
            * binom(nn + j - 1, nn - i)
            * binom(i + j - 2, i - 1).pow(2);
        v as f64
    })
}

#[test]
fn hilbert_condition_against_exact_inverse() {
    let n = 8;
    let h = Dense::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64);
    let hinv = inverse_hilbert(n);
    assert!((&h * &hinv - Dense::identity(n, n)).amax() < 1e-5);
    // σ_max of H and of H⁻¹ are both well separated, so power iteration on
    // each is accurate; σ_min(H) = 1/σ_max(H⁻¹).
    let smax = power_spectral_norm(&h, 1e-15, 10_000, 1).unwrap();
    let smin = 1.0 / power_spectral_norm(&hinv, 1e-15, 10_000, 2).unwrap();
    let oracle = smin / smax;
    let f = jacobi_svd(&h).unwrap();
    let got = f.sigma[7] / f.sigma[0];
    assert!((1e-11..1e-9).contains(&oracle), "{oracle}");
    assert!(rel(got, oracle) < 5e-3, "{got} vs {oracle}");
}

#[test]
fn polar_factor_beats_random_orthogonal_competitors() {
    let x = gaussian(10, 4, 21);
    let q = polar_factors(&x).unwrap().p;
    let best = (&x - &q).norm();
    for seed in 0..500 {
        let z = random_orthonormal(10, 4, 1000 + seed);
        assert!((&x - z).norm() >= best - 1e-12);
    }
}

#[test]
fn spectral_norm_matches_full_svd() {
    let x = gaussian(200, 50, 4);
    assert!(rel(spectral_norm(&x).unwrap(), oracle_two_norm(&x)) <= 1e-8);
    let wide = gaussian(40, 700, 5);
    assert!(rel(spectral_norm(&wide).unwrap(), oracle_two_norm(&wide)) <= 1e-8);
    let big = gaussian(800, 700, 6);
    assert!(rel(spectral_norm(&big).unwrap(), oracle_two_norm(&big)) <= 1e-8);
}

#[test]
fn jacobi_resolves_graded_spectrum() {
    let sigma: Vec<f64> = (0..10).map(|k| 10f64.powi(-k * 3 / 2)).collect();
    let v = random_orthogonal(10, 3);
    let mut x = Dense::zeros(10, 10);
    for (j, s) in sigma.iter().enumerate() {
        x.column_mut(j).copy_from(&(v.column(j) * *s));
    }
    // column scaling of an orthogonal matrix: singular values exactly sigma
    // up to ordering, and one-sided Jacobi is accurate to a few ulps on each.
    let f = jacobi_svd(&x).unwrap();
    for (a, b) in f.sigma.iter().zip(&sigma) {
        assert!(rel(*a, *b) < 1e-12, "{a} vs {b}");
    }
    let y = with_spectrum(30, &sigma, 9);
    let g = jacobi_svd(&y).unwrap();
    assert!(rel(g.sigma[0], 1.0) < 1e-13);
}
