#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stsvd::Dense;

pub fn gaussian(m: usize, n: usize, seed: u64) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dense::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal(n: usize, seed: u64) -> Dense {
    random_orthonormal(n, n, seed)
}

pub fn random_orthonormal(m: usize, n: usize, seed: u64) -> Dense {
    let qr = gaussian(m, n, seed).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Matrix with prescribed singular values and random singular vectors.
pub fn with_spectrum(m: usize, sigma: &[f64], seed: u64) -> Dense {
    let n = sigma.len();
    let u = random_orthonormal(m, n, seed);
    let v = random_orthogonal(n, seed.wrapping_add(1));
    let mut us = u;
    for (j, &s) in sigma.iter().enumerate() {
        us.column_mut(j).scale_mut(s);
    }
    us * v.transpose()
}

/// Geometric spectrum from 1 down to `1/kappa`.
pub fn geometric(n: usize, kappa: f64) -> Vec<f64> {
    (0..n)
        .map(|j| if n == 1 { 1.0 } else { kappa.powf(-(j as f64) / (n - 1) as f64) })
        .collect()
}

/// Singular values by nalgebra's bidiagonalization SVD, descending.
pub fn oracle_sigma(x: &Dense) -> Vec<f64> {
    let mut s: Vec<f64> = x.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn oracle_two_norm(x: &Dense) -> f64 {
    oracle_sigma(x).first().copied().unwrap_or(0.0)
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}
