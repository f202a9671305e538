//! Dense factorization kernels: Householder QR, one-sided Jacobi SVD,
//! pseudo-inverse application, polar factors and matrix norms.
//!
//! All kernels are deterministic pure functions. The Jacobi SVD is the
//! workhorse for every small SVD in the crate because it resolves tiny
//! singular values to high relative accuracy, which a bidiagonalization
//! based SVD does not guarantee.

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Dense;

/// `2^-52`.
pub const EPS: f64 = f64::EPSILON;

/// Up to this many rows/columns on the short side, [`spectral_norm`] uses a
/// full eigen-solve of the Gram matrix instead of power iteration.
pub const SPECTRAL_CROSSOVER: usize = 600;

/// Thin SVD `X = U diag(sigma) V^T` with `r = min(p, q)` terms.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Dense,
    /// Nonincreasing, nonnegative.
    pub sigma: Vec<f64>,
    pub v: Dense,
}

impl SvdFactors {
    /// Number of singular values strictly above `rtol * sigma_1`.
    pub fn rank(&self, rtol: f64) -> usize {
        let Some(&top) = self.sigma.first() else {
            return 0;
        };
        self.sigma.iter().filter(|&&s| s > rtol * top && s > 0.0).count()
    }

    pub fn reconstruct(&self) -> Dense {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolarMode {
    /// `P` has `S^T S`-orthonormal columns.
    SOrthogonal,
    /// `P` has orthonormal columns.
    Orthogonal,
}

/// `A = P H` with `H` symmetric positive semidefinite.
#[derive(Debug, Clone)]
pub struct PolarPair {
    pub p: Dense,
    pub h: Dense,
    pub mode: PolarMode,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Applies `I - 2 v v^T / (v^T v)` to rows `k..` of column `col` of a
/// column-major buffer with leading dimension `m`.
fn reflect(v: &[f64], vnorm2: f64, data: &mut [f64], m: usize, k: usize, col: usize) {
    let c = &mut data[col * m + k..(col + 1) * m];
    let tau = 2.0 * dot(v, c) / vnorm2;
    if tau != 0.0 {
        axpy(-tau, v, c);
    }
}

/// Householder vector for the tail `x`; `None` when `x` is zero.
fn householder_vector(x: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    let norm = dot(x, x).sqrt();
    if norm == 0.0 {
        return None;
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm2 = dot(&v, &v);
    Some((v, vnorm2, alpha))
}

/// Thin Householder QR of a tall matrix: `X = Q R` with `Q` m×n orthonormal
/// and `R` n×n upper triangular with a nonnegative diagonal.
pub fn householder_qr(x: &Dense) -> Result<(Dense, Dense)> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::shape(format!("at least {n} rows"), format!("{m}x{n}")));
    }
    let mut a = x.clone();
    let mut reflectors: Vec<Option<(Vec<f64>, f64)>> = Vec::with_capacity(n);
    {
        let data = a.as_mut_slice();
        for k in 0..n {
            let hv = householder_vector(&data[k * m + k..(k + 1) * m]);
            match hv {
                Some((v, vnorm2, alpha)) => {
                    for j in k + 1..n {
                        reflect(&v, vnorm2, data, m, k, j);
                    }
                    data[k * m + k] = alpha;
                    for i in k + 1..m {
                        data[k * m + i] = 0.0;
                    }
                    reflectors.push(Some((v, vnorm2)));
                }
                None => reflectors.push(None),
            }
        }
    }

    let mut r = a.view((0, 0), (n, n)).upper_triangle();
    let mut q = Dense::identity(m, n);
    {
        let data = q.as_mut_slice();
        for (k, h) in reflectors.iter().enumerate().rev() {
            if let Some((v, vnorm2)) = h {
                for j in k..n {
                    reflect(v, *vnorm2, data, m, k, j);
                }
            }
        }
    }
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            r.row_mut(k).neg_mut();
            q.column_mut(k).neg_mut();
        }
    }
    Ok((q, r))
}

/// Leading singular values of `x` through `count` steps of column-pivoted
/// Householder QR followed by a Jacobi SVD of the computed rows of `R`.
///
/// Returns the values and the Frobenius norm of the unreduced trailing
/// block, which bounds the absolute error of every returned value. Suited
/// to large matrices of low numerical rank.
pub fn leading_singular_values(x: &Dense, count: usize) -> Result<(Vec<f64>, f64)> {
    let (m, n) = x.shape();
    let k = count.min(m).min(n);
    let mut a = x.clone();
    let mut done = 0;
    {
        let data = a.as_mut_slice();
        for step in 0..k {
            let mut best = step;
            let mut best_norm = -1.0;
            for j in step..n {
                let c = &data[j * m + step..(j + 1) * m];
                let nrm = dot(c, c);
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if best_norm <= 0.0 {
                break;
            }
            if best != step {
                for i in 0..m {
                    data.swap(step * m + i, best * m + i);
                }
            }
            let (v, vnorm2, alpha) = householder_vector(&data[step * m + step..(step + 1) * m])
                .expect("pivot column is nonzero");
            for j in step + 1..n {
                reflect(&v, vnorm2, data, m, step, j);
            }
            data[step * m + step] = alpha;
            for i in step + 1..m {
                data[step * m + i] = 0.0;
            }
            done = step + 1;
        }
    }
    let mut residual = 0.0;
    for j in done..n {
        for i in done..m {
            residual += a[(i, j)] * a[(i, j)];
        }
    }
    let top = a.rows(0, done).into_owned();
    let sigma = if done == 0 {
        Vec::new()
    } else {
        jacobi_svd(&top)?.sigma
    };
    Ok((sigma, residual.sqrt()))
}

#[derive(Debug, Clone, Copy)]
pub struct JacobiOptions {
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self { max_sweeps: 30 }
    }
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Tall inputs are first reduced by QR; wide inputs are handled through
/// their transpose. A column pair is rotated while
/// `|b_i^T b_j| > sqrt(p)·eps·‖b_i‖‖b_j‖`, which gives singular values with
/// high relative accuracy. Columns with norm below `eps²·‖X‖_F` are left
/// alone.
pub fn jacobi_svd(x: &Dense) -> Result<SvdFactors> {
    jacobi_svd_with(x, JacobiOptions::default())
}

pub fn jacobi_svd_with(x: &Dense, opts: JacobiOptions) -> Result<SvdFactors> {
    let (p, q) = x.shape();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            message: "non-finite input to SVD".into(),
            residual: f64::NAN,
        });
    }
    if p == 0 || q == 0 {
        let r = p.min(q);
        return Ok(SvdFactors {
            u: Dense::zeros(p, r),
            sigma: Vec::new(),
            v: Dense::zeros(q, r),
        });
    }
    if p < q {
        let f = jacobi_svd_with(&x.transpose(), opts)?;
        return Ok(SvdFactors {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        });
    }
    if p > q {
        let (qm, r) = householder_qr(x)?;
        let f = jacobi_core(r, opts)?;
        return Ok(SvdFactors {
            u: qm * f.u,
            sigma: f.sigma,
            v: f.v,
        });
    }
    jacobi_core(x.clone(), opts)
}

fn jacobi_core(mut b: Dense, opts: JacobiOptions) -> Result<SvdFactors> {
    let (p, q) = b.shape();
    let mut v = Dense::identity(q, q);
    let tol = EPS * (p as f64).sqrt();
    // Columns this small are rounding debris of a rank-deficient input:
    // rotating them against the rest only shrinks them further.
    let negligible = (EPS * EPS * b.norm()).powi(2);
    let mut converged = q < 2;
    let mut worst = 0.0f64;
    {
        let bs = b.as_mut_slice();
        let vs = v.as_mut_slice();
        for _sweep in 0..opts.max_sweeps {
            if converged {
                break;
            }
            let mut rotated = false;
            worst = 0.0;
            for i in 0..q - 1 {
                for j in i + 1..q {
                    let (lo, hi) = bs.split_at_mut(j * p);
                    let ci = &mut lo[i * p..(i + 1) * p];
                    let cj = &mut hi[..p];
                    let alpha = dot(ci, ci);
                    let beta = dot(cj, cj);
                    let gamma = dot(ci, cj);
                    if gamma == 0.0 || alpha <= negligible || beta <= negligible {
                        continue;
                    }
                    let ratio = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                    if ratio <= tol {
                        continue;
                    }
                    worst = worst.max(ratio);
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + 1.0f64.hypot(zeta));
                    let c = 1.0 / 1.0f64.hypot(t);
                    let s = c * t;
                    rotate(ci, cj, c, s);
                    let (vlo, vhi) = vs.split_at_mut(j * q);
                    rotate(&mut vlo[i * q..(i + 1) * q], &mut vhi[..q], c, s);
                }
            }
            if !rotated {
                converged = true;
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure {
            message: format!("Jacobi SVD did not converge in {} sweeps", opts.max_sweeps),
            residual: worst,
        });
    }

    let norms: Vec<f64> = (0..q).map(|j| b.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &c| norms[c].total_cmp(&norms[a]));

    let mut u = Dense::zeros(p, q);
    let mut vout = Dense::zeros(q, q);
    let mut sigma = Vec::with_capacity(q);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma.push(s);
        vout.set_column(dst, &v.column(src));
        if s > 0.0 && s * s > negligible {
            let col = b.column(src) / s;
            if (col.norm() - 1.0).abs() < 1e-8 {
                u.set_column(dst, &col);
                continue;
            }
        }
        missing.push(dst);
    }
    complete_orthonormal(&mut u, &missing);
    Ok(SvdFactors { u, sigma, v: vout })
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Fills the listed (zero) columns of `u` with unit vectors orthogonal to
/// every other column.
fn complete_orthonormal(u: &mut Dense, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let p = u.nrows();
    let mut filled: Vec<bool> = (0..u.ncols()).map(|j| !missing.contains(&j)).collect();
    let mut candidate = 0;
    for &dst in missing {
        while candidate < p {
            let mut w = Dense::zeros(p, 1);
            w[(candidate, 0)] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for j in 0..u.ncols() {
                    if filled[j] {
                        let c = u.column(j).dot(&w.column(0));
                        w.column_mut(0).axpy(-c, &u.column(j), 1.0);
                    }
                }
            }
            let nrm = w.norm();
            if nrm > 0.5 {
                u.set_column(dst, &(w.column(0) / nrm));
                filled[dst] = true;
                break;
            }
        }
    }
}

/// `X^† B` where singular values at or below `rtol·σ_1` are treated as
/// zero. The default `rtol` is `max(m, n)·2^-52`.
pub fn pinv_apply(x: &Dense, b: &Dense, rtol: Option<f64>) -> Result<Dense> {
    let (m, n) = x.shape();
    if b.nrows() != m {
        return Err(Error::shape(format!("{m} rows"), format!("{} rows", b.nrows())));
    }
    let rtol = rtol.unwrap_or(m.max(n) as f64 * EPS);
    let f = jacobi_svd(x)?;
    let r = f.rank(rtol);
    let mut coeff = f.u.columns(0, r).tr_mul(b);
    for (j, &s) in f.sigma.iter().take(r).enumerate() {
        coeff.row_mut(j).scale_mut(1.0 / s);
    }
    Ok(f.v.columns(0, r) * coeff)
}

/// Classical polar decomposition from the SVD: `Q = U V^T`, `H = V Σ V^T`.
pub fn polar_factors(x: &Dense) -> Result<PolarPair> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::shape(format!("at least {n} rows"), format!("{m}x{n}")));
    }
    let f = jacobi_svd(x)?;
    Ok(polar_from_svd(&f))
}

pub(crate) fn polar_from_svd(f: &SvdFactors) -> PolarPair {
    let p = &f.u * f.v.transpose();
    let mut vs = f.v.clone();
    for (j, &s) in f.sigma.iter().enumerate() {
        vs.column_mut(j).scale_mut(s);
    }
    let h = symmetrize(&(vs * f.v.transpose()));
    PolarPair {
        p,
        h,
        mode: PolarMode::Orthogonal,
    }
}

pub(crate) fn symmetrize(h: &Dense) -> Dense {
    (h + h.transpose()) * 0.5
}

pub fn fro_norm(x: &Dense) -> f64 {
    x.norm()
}

/// Largest singular value.
///
/// When the short side has at most [`SPECTRAL_CROSSOVER`] entries this is
/// the square root of the top eigenvalue of the (rescaled) Gram matrix;
/// otherwise it falls back to [`power_spectral_norm`] with tolerance `1e-9`.
pub fn spectral_norm(x: &Dense) -> Result<f64> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    let scale = x.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !scale.is_finite() {
        return Err(Error::NumericalFailure {
            message: "non-finite entry in norm computation".into(),
            residual: f64::NAN,
        });
    }
    if m.min(n) <= SPECTRAL_CROSSOVER {
        let y = x / scale;
        let gram = if m >= n { y.tr_mul(&y) } else { &y * y.transpose() };
        let top = SymmetricEigen::new(gram).eigenvalues.max();
        return Ok(scale * top.max(0.0).sqrt());
    }
    power_spectral_norm(x, 1e-9, 5000, 0x5eed)
}

/// Power iteration on `X^T X` from a seeded Gaussian start vector. Stops
/// once both the last change and its geometric extrapolation are below
/// `tol` relative to the estimate.
pub fn power_spectral_norm(x: &Dense, tol: f64, max_iter: usize, seed: u64) -> Result<f64> {
    let n = x.ncols();
    if n == 0 || x.nrows() == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Dense::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng));
    v /= v.norm();
    let mut est = 0.0;
    let mut prev_step = f64::INFINITY;
    for _ in 0..max_iter {
        let w = x * &v;
        let next = w.norm();
        let z = x.tr_mul(&w);
        let zn = z.norm();
        if zn == 0.0 {
            return Ok(next);
        }
        v = z / zn;
        // Steps shrink geometrically with ratio rho; the remaining error is
        // about step·rho/(1 - rho).
        let step = (next - est).abs();
        let rho = (step / prev_step).min(1.0);
        let remaining = if rho < 1.0 { step * rho / (1.0 - rho) } else { f64::INFINITY };
        if step <= tol * next && (remaining <= tol * next || step == 0.0) {
            return Ok(next);
        }
        prev_step = step;
        est = next;
    }
    Err(Error::NotConverged {
        estimate: est,
        iterations: max_iter,
    })
}

/// Orthonormal basis of the numerical range: left singular vectors whose
/// singular value exceeds `rtol·σ_1`.
pub fn orthonormal_basis(x: &Dense, rtol: f64) -> Result<Dense> {
    let f = jacobi_svd(x)?;
    let r = f.rank(rtol);
    Ok(f.u.columns(0, r).into_owned())
}

/// `‖X^T X - I‖_2`.
pub fn orthonormality_defect(x: &Dense) -> Result<f64> {
    let g = x.tr_mul(x) - Dense::identity(x.ncols(), x.ncols());
    spectral_norm(&g)
}
