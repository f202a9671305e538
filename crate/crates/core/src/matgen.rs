//! Test-matrix generators.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, Dense, MatrixHandle};

/// Cauchy matrix `C_ij = 1/(x_i + y_j)` on equispaced nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySpec {
    pub n: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl CauchySpec {
    /// Nodes in `[2, 100]` and `[-1000, -500]`.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            x: (2.0, 100.0),
            y: (-1000.0, -500.0),
        }
    }
}

/// `n` equispaced points from `a` to `b` inclusive.
fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

pub fn gen_cauchy(spec: CauchySpec) -> Result<MatrixHandle> {
    if spec.n < 2 {
        return Err(Error::InvalidDimension(format!("Cauchy order must be at least 2, got {}", spec.n)));
    }
    let x = linspace(spec.x.0, spec.x.1, spec.n);
    let y = linspace(spec.y.0, spec.y.1, spec.n);
    let mut c = Dense::zeros(spec.n, spec.n);
    for (j, &yj) in y.iter().enumerate() {
        for (i, &xi) in x.iter().enumerate() {
            let d = xi + yj;
            if d == 0.0 {
                return Err(Error::DegenerateInput(format!("x_{} + y_{} = 0", i + 1, j + 1)));
            }
            c[(i, j)] = 1.0 / d;
        }
    }
    Ok(c.into())
}

/// Dense `m×n` matrix of independent standard normal entries.
pub fn gen_gaussian(m: usize, n: usize, seed: u64) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dense::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
}

/// Random sparse `m×n` matrix with roughly `density·m·n` nonzeros and 2-norm
/// condition number close to `kappa`.
///
/// Each column gets a Binomial(m, density) number of distinct rows with
/// values uniform in `[-1, 1]`; an empty column receives a single entry at
/// row `j mod m`. Columns are normalized and then scaled by
/// `kappa^{-j/(n-1)}`, so when the pattern columns are close to orthogonal
/// the extreme singular values are about `1` and `1/kappa`.
pub fn gen_sparse_conditioned(m: usize, n: usize, density: f64, kappa: f64, seed: u64) -> Result<MatrixHandle> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!("empty shape {m}×{n}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Precondition(format!("density must lie in (0, 1], got {density}")));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::Precondition(format!("kappa must be finite and at least 1, got {kappa}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = Binomial::new(m as u64, density).map_err(|e| Error::Precondition(e.to_string()))?;
    let mut triplets = Vec::with_capacity((density * m as f64 * n as f64 * 1.1) as usize + n);
    let mut col = Vec::new();
    let mut safety = 0usize;
    for j in 0..n {
        col.clear();
        let k = count.sample(&mut rng) as usize;
        if k == 0 {
            safety += 1;
            col.push((j % m, if rng.random::<bool>() { 1.0 } else { -1.0 }));
        } else {
            let mut rows = index::sample(&mut rng, m, k).into_vec();
            rows.sort_unstable();
            for r in rows {
                col.push((r, rng.random_range(-1.0..=1.0)));
            }
        }
        let mut norm = col.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            col.clear();
            col.push((j % m, 1.0));
            norm = 1.0;
        }
        let scale = if n == 1 {
            1.0
        } else {
            kappa.powf(-(j as f64) / (n - 1) as f64)
        };
        triplets.extend(col.iter().map(|&(r, v)| (r, j, v / norm * scale)));
    }
    if safety > 0 {
        log::debug!("{safety} empty columns filled with the diagonal safety pattern");
    }
    Ok(CsrMatrix::from_triplets(m, n, &triplets)?.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::jacobi_svd;

    #[test]
    fn cauchy_two_by_two() {
        let c = gen_cauchy(CauchySpec::new(2)).unwrap().to_dense();
        assert_eq!(c[(0, 0)], -1.0 / 998.0);
        assert_eq!(c[(0, 1)], -1.0 / 498.0);
        assert_eq!(c[(1, 0)], -1.0 / 900.0);
        assert_eq!(c[(1, 1)], -1.0 / 400.0);
    }

    #[test]
    fn cauchy_nodes_hit_endpoints() {
        let x = linspace(2.0, 100.0, 7);
        assert_eq!(x[0], 2.0);
        assert_eq!(x[6], 100.0);
        assert!(gen_cauchy(CauchySpec::new(1)).is_err());
        let bad = CauchySpec {
            n: 3,
            x: (0.0, 2.0),
            y: (-2.0, 0.0),
        };
        assert!(matches!(gen_cauchy(bad), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn dense_well_conditioned_case() {
        let a = gen_sparse_conditioned(60, 8, 1.0, 1.0, 3).unwrap();
        let MatrixHandle::Csr(csr) = &a else { panic!("expected sparse output") };
        assert_eq!(csr.nnz(), 480);
        let s = jacobi_svd(&a.to_dense()).unwrap().sigma;
        assert!(s[0] / s[7] <= 10.0);
    }

    #[test]
    fn sparse_columns_nonempty_and_density() {
        let a = gen_sparse_conditioned(3000, 40, 0.01, 1e4, 9).unwrap();
        let MatrixHandle::Csr(csr) = &a else { panic!("expected sparse output") };
        let nnz = csr.nnz() as f64;
        assert!((nnz / 1200.0 - 1.0).abs() < 0.1, "{nnz}");
        let cols = csr.columns();
        assert!(cols.iter().all(|c| !c.is_empty()));

        let thin = gen_sparse_conditioned(50, 30, 1e-4, 10.0, 1).unwrap();
        let MatrixHandle::Csr(thin) = &thin else { panic!() };
        assert!(thin.columns().iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gen_sparse_conditioned(10, 3, 0.0, 1.0, 0).is_err());
        assert!(gen_sparse_conditioned(10, 3, 1.5, 1.0, 0).is_err());
        assert!(gen_sparse_conditioned(10, 3, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let a = gen_sparse_conditioned(200, 10, 0.05, 100.0, 4).unwrap().to_dense();
        let b = gen_sparse_conditioned(200, 10, 0.05, 100.0, 4).unwrap().to_dense();
        assert_eq!(a, b);
    }
}
