//! The `S^T S`-SVD: `A = W Θ V^T` with `(SW)^T (SW) = I`, `V^T V = I` and
//! `Θ` nonnegative and nonincreasing.
//!
//! Two routes are implemented:
//!
//! * [`sts_svd`]: sketch `SA`, take its R factor, compute `R = U₁ Θ V^T` by
//!   Jacobi and recover `W = A V Θ⁻¹`. Only the sketch and the final product
//!   touch `A`, and both respect sparsity.
//! * [`sts_svd_via_qr`]: a randomized Gram–Schmidt factorization
//!   `A = QR` with `(SQ)^T SQ = I`, then `R = U Θ V^T` and `W = Q U`. This
//!   reads each column of `A` exactly once.
//!
//! Both give the same `Θ` up to rounding because `SA` and `SQ·R` have
//! identical singular values.

use log::warn;

use crate::error::{Error, Result};
use crate::kernels::{householder_qr, jacobi_svd, spectral_norm, SvdFactors, EPS};
use crate::matrix::{Dense, MatrixHandle};
use crate::sketch::{EmbeddingCertificate, SketchKind, SketchOperator};

/// Factors of `A = W Θ V^T` restricted to the retained rank `r`.
#[derive(Debug, Clone)]
pub struct StsSvdFactors {
    /// m×r, sketch-orthonormal columns.
    pub w: Dense,
    /// Retained `θ_1 >= … >= θ_r > 0`.
    pub theta: Vec<f64>,
    /// n×r, orthonormal columns.
    pub v: Dense,
    pub rank: usize,
    pub op: SketchOperator,
    /// Set when every one of the `s` sketched directions was retained, which
    /// suggests `s` may be smaller than `rank(A)`.
    pub undersized_sketch: bool,
}

impl StsSvdFactors {
    /// `W Θ V^T`.
    pub fn reconstruct(&self) -> Dense {
        let mut wt = self.w.clone();
        for (j, &t) in self.theta.iter().enumerate() {
            wt.column_mut(j).scale_mut(t);
        }
        wt * self.v.transpose()
    }

    /// `‖(SW)^T SW - I‖_2`.
    pub fn sketch_orthogonality_defect(&self) -> Result<f64> {
        let sw = self.op.apply_dense(&self.w)?;
        let r = sw.ncols();
        spectral_norm(&(sw.tr_mul(&sw) - Dense::identity(r, r)))
    }
}

/// Default relative cutoff for retained `θ`: `max(s, n)·2^-52`.
pub fn default_rtol(s: usize, n: usize) -> f64 {
    s.max(n) as f64 * EPS
}

fn check_op(a: &MatrixHandle, op: &SketchOperator) -> Result<()> {
    if op.m() != a.nrows() {
        return Err(Error::shape(
            format!("matrix with {} rows", op.m()),
            format!("{} rows", a.nrows()),
        ));
    }
    Ok(())
}

fn retained_rank(theta: &[f64], rtol: f64) -> usize {
    match theta.first() {
        Some(&top) if top > 0.0 => theta.iter().take_while(|&&t| t > rtol * top).count(),
        _ => 0,
    }
}

/// `V_r Θ_r^{-1}`.
fn scaled_right(v: &Dense, theta: &[f64], r: usize) -> Dense {
    let mut vt = v.columns(0, r).into_owned();
    for (j, &t) in theta.iter().take(r).enumerate() {
        vt.column_mut(j).scale_mut(1.0 / t);
    }
    vt
}

/// Computes the `S^T S`-SVD of `a` through the SVD of the R factor of `SA`.
///
/// `θ_i <= rtol·θ_1` are dropped; `rtol` defaults to [`default_rtol`].
pub fn sts_svd(a: &MatrixHandle, op: &SketchOperator, rtol: Option<f64>) -> Result<StsSvdFactors> {
    check_op(a, op)?;
    let n = a.ncols();
    let s = op.s();
    let rtol = rtol.unwrap_or_else(|| default_rtol(s, n));

    let sa = op.apply(a)?;
    if let Some(bad) = sa.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            message: "sketched matrix has non-finite entries".into(),
            residual: *bad,
        });
    }
    let small = if s >= n {
        let (_, r) = householder_qr(&sa)?;
        jacobi_svd(&r)?
    } else {
        jacobi_svd(&sa)?
    };
    let SvdFactors { sigma: theta, v, .. } = small;

    let r = retained_rank(&theta, rtol);
    let w = a.mul_dense(&scaled_right(&v, &theta, r))?;
    let undersized_sketch = r > 0 && r == s;
    if undersized_sketch {
        warn!("all {s} sketched directions retained; sketch dimension may be below rank(A)");
    }
    Ok(StsSvdFactors {
        w,
        theta: theta[..r].to_vec(),
        v: v.columns(0, r).into_owned(),
        rank: r,
        op: op.clone(),
        undersized_sketch,
    })
}

/// Default rank-deficiency cutoff of [`sketched_qr`].
pub const SKETCHED_QR_RTOL: f64 = 1e-12;

/// Randomized Gram–Schmidt: `A = QR` with `(SQ)^T SQ = I` and `R` upper
/// triangular with positive diagonal.
///
/// Column `j` is projected against the sketched basis with two classical
/// Gram–Schmidt passes in the sketch space (which solves the small least
/// squares problem to working accuracy), the residual is re-sketched and
/// normalized in the sketched norm. A residual whose sketched norm falls
/// to `rtol·‖S a_j‖` or below is reported as rank deficiency.
pub fn sketched_qr(a: &MatrixHandle, op: &SketchOperator, rtol: Option<f64>) -> Result<(Dense, Dense)> {
    check_op(a, op)?;
    let (m, n) = (a.nrows(), a.ncols());
    let s = op.s();
    if s < n {
        return Err(Error::InvalidDimension(format!(
            "sketched QR needs s >= n, got s = {s}, n = {n}"
        )));
    }
    let rtol = rtol.unwrap_or(SKETCHED_QR_RTOL);
    let dense = a.to_dense();
    let mut q = Dense::zeros(m, n);
    let mut sq = Dense::zeros(s, n);
    let mut r = Dense::zeros(n, n);

    for j in 0..n {
        let mut w = dense.column(j).into_owned();
        let mut p = Dense::from_column_slice(s, 1, &op.apply_vec(w.as_slice())?);
        let sketched_norm = p.norm();
        if j > 0 {
            let basis = sq.columns(0, j);
            let mut coeff = basis.tr_mul(&p);
            p -= basis * &coeff;
            let fix = basis.tr_mul(&p);
            coeff += &fix;
            w -= q.columns(0, j) * &coeff;
            r.view_mut((0, j), (j, 1)).copy_from(&coeff);
        }
        let pw = op.apply_vec(w.as_slice())?;
        let rjj = pw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(rjj > rtol * sketched_norm) || rjj == 0.0 {
            return Err(Error::RankDeficient { column: j + 1 });
        }
        r[(j, j)] = rjj;
        q.set_column(j, &(w / rjj));
        for (t, v) in pw.iter().enumerate() {
            sq[(t, j)] = v / rjj;
        }
    }
    Ok((q, r))
}

/// `S^T S`-SVD through [`sketched_qr`]: `R = U Θ V^T`, `W = Q U`.
/// Fails on rank-deficient `a`.
pub fn sts_svd_via_qr(a: &MatrixHandle, op: &SketchOperator, rtol: Option<f64>) -> Result<StsSvdFactors> {
    let (q, r) = sketched_qr(a, op, None)?;
    let n = a.ncols();
    let rtol = rtol.unwrap_or_else(|| default_rtol(op.s(), n));
    let f = jacobi_svd(&r)?;
    let rank = retained_rank(&f.sigma, rtol);
    let w = q * f.u.columns(0, rank);
    Ok(StsSvdFactors {
        w,
        theta: f.sigma[..rank].to_vec(),
        v: f.v.columns(0, rank).into_owned(),
        rank,
        op: op.clone(),
        undersized_sketch: rank > 0 && rank == op.s(),
    })
}

/// Leading rank-`k` part `W_k Θ_k V_k^T`, the best rank-`k` approximation
/// in the sketched Frobenius and spectral norms.
pub fn truncate(f: &StsSvdFactors, k: usize) -> Result<StsSvdFactors> {
    if k == 0 || k > f.rank {
        return Err(Error::InvalidDimension(format!(
            "truncation rank {k} outside 1..={}",
            f.rank
        )));
    }
    Ok(StsSvdFactors {
        w: f.w.columns(0, k).into_owned(),
        theta: f.theta[..k].to_vec(),
        v: f.v.columns(0, k).into_owned(),
        rank: k,
        op: f.op.clone(),
        undersized_sketch: false,
    })
}

/// `‖X‖_{S,F} = ‖SX‖_F`.
pub fn s_fro_norm(x: &MatrixHandle, op: &SketchOperator) -> Result<f64> {
    Ok(op.apply(x)?.norm())
}

/// `‖X‖_{S,2} = ‖SX‖_2`.
pub fn s_two_norm(x: &MatrixHandle, op: &SketchOperator) -> Result<f64> {
    spectral_norm(&op.apply(x)?)
}

/// Leading `k` singular values from a randomized range finder: `Y = AΩ`
/// with `Ω^T` a subsampled cosine transform of `k + oversample` rows,
/// `Y = QR`, then the SVD of `Q^T A`.
pub fn randomized_singular_values(a: &MatrixHandle, k: usize, oversample: usize, seed: u64) -> Result<Vec<f64>> {
    let (m, n) = (a.nrows(), a.ncols());
    let l = (k + oversample).min(n).min(m);
    if l == 0 {
        return Ok(Vec::new());
    }
    let at = a.to_dense().transpose();
    let omega = SketchOperator::new(SketchKind::Srtt, l, n, seed)?;
    let y = omega.apply_dense(&at)?.transpose();
    let (q, _) = householder_qr(&y)?;
    let b = a.to_dense().tr_mul(&q).transpose();
    let mut sigma = jacobi_svd(&b)?.sigma;
    sigma.truncate(k.min(l));
    Ok(sigma)
}

/// Per-index check of `√(1-ε)·σ_k <= θ_k <= √(1+ε)·σ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub epsilon_emp: f64,
    pub flags: Vec<bool>,
}

impl SpectrumComparison {
    pub fn all_pass(&self) -> bool {
        self.flags.iter().all(|&f| f)
    }
}

/// Absolute slack of [`compare_spectra`], relative to `σ_1`.
pub const SPECTRUM_SLACK: f64 = 1e-10;

/// Compares `θ` against a reference SVD of the same matrix using the
/// distortion in `cert`, which must be measured over `Range(A)`.
/// Indices past the retained rank count as `θ_k = 0`. Each comparison allows
/// an absolute slack of `SPECTRUM_SLACK·σ_1`.
pub fn compare_spectra(
    f: &StsSvdFactors,
    reference: &SvdFactors,
    cert: &EmbeddingCertificate,
) -> Result<SpectrumComparison> {
    if f.v.nrows() != reference.v.nrows() {
        return Err(Error::shape(
            format!("reference with {} columns", f.v.nrows()),
            format!("{} columns", reference.v.nrows()),
        ));
    }
    let eps = cert.epsilon_emp;
    let sigma = reference.sigma.clone();
    let slack = SPECTRUM_SLACK * sigma.first().copied().unwrap_or(0.0);
    let theta: Vec<f64> = (0..sigma.len())
        .map(|k| f.theta.get(k).copied().unwrap_or(0.0))
        .collect();
    let flags = theta
        .iter()
        .zip(&sigma)
        .map(|(&t, &s)| {
            let lo = (1.0 - eps).max(0.0).sqrt() * s;
            let hi = (1.0 + eps).sqrt() * s;
            t >= lo - slack && t <= hi + slack
        })
        .collect();
    Ok(SpectrumComparison {
        theta,
        sigma,
        epsilon_emp: eps,
        flags,
    })
}
