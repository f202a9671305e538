//! Nearest sketch-orthogonal and nearest orthogonal matrices, and reports
//! on how far each is from the other kind of orthogonality.
//!
//! For `A = W Θ V^T` the matrix `P = W V^T` minimizes `‖A - Q‖_{S,*}` over
//! every sketch-orthogonal `Q = W L V^T` (`L` orthogonal), in both the
//! sketched Frobenius and spectral norms; `A = P H` with `H = V Θ V^T` is
//! the randomized polar decomposition. The classical minimizer is the
//! orthogonal polar factor `T = U Y^T`.
//!
//! Bound checks are evaluated at a distortion `ε`. With `ε` measured by an
//! [`EmbeddingCertificate`] over the right subspace they are deterministic
//! consequences of the embedding inequality, so every report must pass.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{jacobi_svd, orthonormality_defect, polar_factors, spectral_norm, symmetrize};
pub use crate::kernels::{PolarMode, PolarPair};
use crate::matrix::{Dense, MatrixHandle};
use crate::sketch::{certify_range, EmbeddingCertificate, SketchOperator};
use crate::stssvd::{sts_svd, StsSvdFactors};

/// Absolute slack of every bound check.
pub const BOUND_SLACK: f64 = 1e-10;

/// Matrices within this defect count as orthonormal or sketch-orthonormal
/// when classifying input to [`orthogonality_report`].
pub const CLASSIFY_TOL: f64 = 1e-6;

/// `P = W V^T`, `H = V Θ V^T` from existing factors of a full-column-rank
/// matrix.
pub fn polar_from_factors(f: &StsSvdFactors) -> Result<PolarPair> {
    let n = f.v.nrows();
    if f.rank < n {
        return Err(Error::RankDeficient { column: f.rank + 1 });
    }
    let p = &f.w * f.v.transpose();
    let mut vt = f.v.clone();
    for (j, &t) in f.theta.iter().enumerate() {
        vt.column_mut(j).scale_mut(t);
    }
    let h = symmetrize(&(vt * f.v.transpose()));
    Ok(PolarPair {
        p,
        h,
        mode: PolarMode::SOrthogonal,
    })
}

/// Nearest sketch-orthogonal matrix to `a` in both sketched norms.
/// Rank-deficient `a` is rejected.
pub fn nearest_sts_orthogonal(a: &MatrixHandle, op: &SketchOperator, rtol: Option<f64>) -> Result<PolarPair> {
    polar_from_factors(&sts_svd(a, op, rtol)?)
}

/// Nearest matrix with orthonormal columns, `T = U Y^T`, in both the
/// Frobenius and spectral norms.
pub fn nearest_orthogonal(a: &MatrixHandle) -> Result<PolarPair> {
    polar_factors(&a.to_dense())
}

/// Sketch-orthogonal polar factor of an orthonormal `t`:
/// `H = ((ST)^T ST)^{1/2}`, `Q_T = T H⁻¹`.
///
/// The square root comes from the SVD `ST = U Σ Z^T`, so `H = Z Σ Z^T`
/// without forming the Gram matrix.
pub fn sts_polar_of_orthonormal(t: &Dense, op: &SketchOperator) -> Result<PolarPair> {
    let defect = orthonormality_defect(t)?;
    if defect > 1e-10 {
        return Err(Error::Precondition(format!(
            "T is not orthonormal: ‖T^T T - I‖_2 = {defect:e}"
        )));
    }
    let st = op.apply_dense(t)?;
    let f = jacobi_svd(&st)?;
    let n = t.ncols();
    let smin = f.sigma.last().copied().unwrap_or(1.0);
    if f.sigma.len() < n || smin <= n as f64 * f64::EPSILON {
        return Err(Error::NumericalFailure {
            message: "sketched basis is singular; S does not embed Range(T)".into(),
            residual: smin,
        });
    }
    let mut zs = f.v.clone();
    let mut zinv = f.v.clone();
    for (j, &s) in f.sigma.iter().enumerate() {
        zs.column_mut(j).scale_mut(s);
        zinv.column_mut(j).scale_mut(1.0 / s);
    }
    let h = symmetrize(&(zs * f.v.transpose()));
    let p = t * (zinv * f.v.transpose());
    Ok(PolarPair {
        p,
        h,
        mode: PolarMode::SOrthogonal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// `‖P^T P - I‖_F <= √n·ε/(1-ε)` for sketch-orthonormal `P`.
    SOrthLossFro,
    /// `‖P^T P - I‖_2 <= ε/(1-ε)` for sketch-orthonormal `P`.
    SOrthLossTwo,
    /// `‖P - Q_P‖_2 <= ε/(1-ε)`.
    PolarDistance,
    /// `‖P^T P - I‖_2 / (‖P‖_2 + 1) <= ‖P - Q_P‖_2`.
    PolarGapLower,
    /// `‖P - Q_P‖_2 <= ‖P^T P - I‖_2`.
    PolarGapUpper,
    /// `‖T^T S^T S T - I‖_F <= ε·√n` for orthonormal `T`.
    OrthSketchLossFro,
    /// `‖T^T S^T S T - I‖_2 <= ε` for orthonormal `T`.
    OrthSketchLossTwo,
    /// `‖T - Q_T‖_{S,2} <= ε`.
    SketchPolarDistance,
    /// `‖A - T‖_2 - ε/(1-ε) <= ‖A - P‖_2`.
    NearestLower,
    /// `‖A - P‖_2 <= (1+ε)/(1-ε)·‖A - T‖_2 + ε/(1-ε)`.
    NearestUpper,
}

impl BoundId {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundId::SOrthLossFro => "s_orth_loss_fro",
            BoundId::SOrthLossTwo => "s_orth_loss_two",
            BoundId::PolarDistance => "polar_distance",
            BoundId::PolarGapLower => "polar_gap_lower",
            BoundId::PolarGapUpper => "polar_gap_upper",
            BoundId::OrthSketchLossFro => "orth_sketch_loss_fro",
            BoundId::OrthSketchLossTwo => "orth_sketch_loss_two",
            BoundId::SketchPolarDistance => "sketch_polar_distance",
            BoundId::NearestLower => "nearest_lower",
            BoundId::NearestUpper => "nearest_upper",
        }
    }

    /// Human-readable statement of the inequality.
    pub fn statement(&self) -> &'static str {
        match self {
            BoundId::SOrthLossFro => "‖PᵀP−I‖_F ≤ √n·ε/(1−ε), P sketch-orthonormal",
            BoundId::SOrthLossTwo => "‖PᵀP−I‖_2 ≤ ε/(1−ε), P sketch-orthonormal",
            BoundId::PolarDistance => "‖P−Q_P‖_2 ≤ ε/(1−ε), Q_P orthogonal polar factor of P",
            BoundId::PolarGapLower => "‖PᵀP−I‖_2/(‖P‖_2+1) ≤ ‖P−Q_P‖_2",
            BoundId::PolarGapUpper => "‖P−Q_P‖_2 ≤ ‖PᵀP−I‖_2",
            BoundId::OrthSketchLossFro => "‖TᵀSᵀST−I‖_F ≤ ε·√n, T orthonormal",
            BoundId::OrthSketchLossTwo => "‖TᵀSᵀST−I‖_2 ≤ ε, T orthonormal",
            BoundId::SketchPolarDistance => "‖T−Q_T‖_{S,2} ≤ ε, Q_T sketch-orthogonal polar factor of T",
            BoundId::NearestLower => "‖A−T‖_2 − ε/(1−ε) ≤ ‖A−P‖_2",
            BoundId::NearestUpper => "‖A−P‖_2 ≤ (1+ε)/(1−ε)·‖A−T‖_2 + ε/(1−ε)",
        }
    }
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub lhs: f64,
    pub rhs: f64,
    pub epsilon: f64,
    pub pass: bool,
    pub matrix_id: Option<String>,
    pub s: usize,
    pub seed: u64,
    #[serde(skip)]
    pub provenance: &'static str,
}

impl BoundReport {
    pub fn new(bound_id: BoundId, lhs: f64, rhs: f64, epsilon: f64, op: &SketchOperator) -> Self {
        Self {
            bound_id,
            lhs,
            rhs,
            epsilon,
            pass: lhs <= rhs + BOUND_SLACK,
            matrix_id: None,
            s: op.s(),
            seed: op.seed(),
            provenance: bound_id.statement(),
        }
    }

    pub fn with_matrix_id(mut self, id: impl Into<String>) -> Self {
        self.matrix_id = Some(id.into());
        self
    }
}

/// `ε/(1-ε)`, infinite once `ε >= 1` (the bound is vacuous there).
pub fn distortion_ratio(eps: f64) -> f64 {
    if eps >= 1.0 {
        f64::INFINITY
    } else {
        eps / (1.0 - eps)
    }
}

/// `(ε+δ)/(1-ε)`: the bound `ε/(1-ε)` for a computed factor whose sketched
/// Gram matrix is off the identity by `δ` in the spectral norm.
pub fn loss_ratio(eps: f64, s_defect: f64) -> f64 {
    if eps >= 1.0 {
        f64::INFINITY
    } else {
        (eps + s_defect) / (1.0 - eps)
    }
}

/// Orthogonality bounds for `p` at `cert.epsilon_emp`; `cert` must be
/// measured over `Range(P)`.
///
/// Sketch-orthonormal input yields the loss-of-orthogonality checks and the
/// polar-distance checks; orthonormal input yields the sketched-loss checks.
/// For sketch-orthonormal input the bound `ε/(1-ε)` is evaluated as
/// `(ε+δ)/(1-ε)` with `δ = ‖(SP)^T SP - I‖_2` measured on `p`.
/// Input that is both (e.g. with an exact isometry) yields all of them.
pub fn orthogonality_report(p: &Dense, op: &SketchOperator, cert: &EmbeddingCertificate) -> Result<Vec<BoundReport>> {
    orthogonality_report_at(p, op, cert.epsilon_emp)
}

/// [`orthogonality_report`] at a caller-chosen `epsilon`, e.g. an asserted
/// design value rather than a measured one.
pub fn orthogonality_report_at(p: &Dense, op: &SketchOperator, epsilon: f64) -> Result<Vec<BoundReport>> {
    let n = p.ncols();
    let sp = op.apply_dense(p)?;
    let sketch_gram = sp.tr_mul(&sp) - Dense::identity(n, n);
    let gram = p.tr_mul(p) - Dense::identity(n, n);
    let s_defect = spectral_norm(&sketch_gram)?;
    let defect = spectral_norm(&gram)?;
    let sqrt_n = (n as f64).sqrt();

    let mut out = Vec::new();
    if s_defect <= CLASSIFY_TOL {
        let ratio = loss_ratio(epsilon, s_defect);
        out.push(BoundReport::new(BoundId::SOrthLossFro, gram.norm(), sqrt_n * ratio, epsilon, op));
        out.push(BoundReport::new(BoundId::SOrthLossTwo, defect, ratio, epsilon, op));
        let qp = polar_factors(p)?.p;
        let dist = spectral_norm(&(p - &qp))?;
        let pnorm = spectral_norm(p)?;
        out.push(BoundReport::new(BoundId::PolarDistance, dist, ratio, epsilon, op));
        out.push(BoundReport::new(BoundId::PolarGapLower, defect / (pnorm + 1.0), dist, epsilon, op));
        out.push(BoundReport::new(BoundId::PolarGapUpper, dist, defect, epsilon, op));
    }
    if defect <= CLASSIFY_TOL {
        out.push(BoundReport::new(
            BoundId::OrthSketchLossFro,
            sketch_gram.norm(),
            epsilon * sqrt_n,
            epsilon,
            op,
        ));
        out.push(BoundReport::new(BoundId::OrthSketchLossTwo, s_defect, epsilon, epsilon, op));
    }
    if out.is_empty() {
        return Err(Error::Precondition(format!(
            "matrix is neither orthonormal ({defect:e}) nor sketch-orthonormal ({s_defect:e})"
        )));
    }
    Ok(out)
}

/// How the distortion for a report is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    /// Measured over the subspaces the bound involves.
    Empirical,
    /// A user-asserted design value.
    Asserted(f64),
}

/// Comparison of the sketched and classical nearest matrices.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    /// `‖A - P‖_2`.
    pub dist_a_p: f64,
    /// `‖A - T‖_2`.
    pub dist_a_t: f64,
    /// `‖P - T‖_2`.
    pub dist_p_t: f64,
    /// `‖T - Q_T‖_{S,2}`.
    pub dist_t_qt: f64,
    /// Distortion the reports were evaluated at.
    pub epsilon: f64,
    /// Distortion measured over `Range(A)` alone, when measured at all.
    pub epsilon_narrow: Option<f64>,
    pub lower: BoundReport,
    pub upper: BoundReport,
    pub sketch_polar: BoundReport,
    /// The sandwich passes at `epsilon` but fails at `epsilon_narrow`.
    pub narrow_violation: bool,
}

impl SandwichReport {
    pub fn pass(&self) -> bool {
        self.lower.pass && self.upper.pass
    }

    pub fn reports(&self) -> [&BoundReport; 3] {
        [&self.lower, &self.upper, &self.sketch_polar]
    }
}

fn sandwich_reports(
    dist_a_p: f64,
    dist_a_t: f64,
    dist_t_qt: f64,
    eps: f64,
    op: &SketchOperator,
) -> (BoundReport, BoundReport, BoundReport) {
    let ratio = distortion_ratio(eps);
    let growth = if eps >= 1.0 {
        f64::INFINITY
    } else {
        (1.0 + eps) / (1.0 - eps)
    };
    (
        BoundReport::new(BoundId::NearestLower, dist_a_t - ratio, dist_a_p, eps, op),
        BoundReport::new(BoundId::NearestUpper, dist_a_p, growth * dist_a_t + ratio, eps, op),
        BoundReport::new(BoundId::SketchPolarDistance, dist_t_qt, eps, eps, op),
    )
}

/// Computes both minimizers for a full-column-rank `a` and evaluates the
/// two-sided bound on `‖A - P‖_2` in terms of `‖A - T‖_2`.
pub fn nearest_sandwich_report(a: &MatrixHandle, op: &SketchOperator, choice: EpsilonChoice) -> Result<SandwichReport> {
    let p = nearest_sts_orthogonal(a, op, None)?;
    let t = nearest_orthogonal(a)?;
    sandwich_report(&a.to_dense(), &p.p, &t.p, op, choice)
}

/// Sandwich report from precomputed minimizers `p` and `t` of `a`.
///
/// With [`EpsilonChoice::Empirical`] the distortion is measured over the
/// union of `Range(A)`, `Range(A - T)` and `Range(T - Q_T)`; the inequality
/// chain only ever applies the embedding to vectors in those ranges. The
/// distortion over `Range(A)` alone is recorded as well, and a pass that
/// would turn into a failure at that narrower value is flagged.
pub fn sandwich_report(
    a: &Dense,
    p: &Dense,
    t: &Dense,
    op: &SketchOperator,
    choice: EpsilonChoice,
) -> Result<SandwichReport> {
    let qt = sts_polar_of_orthonormal(t, op)?;
    let a_minus_t = a - t;
    let t_minus_qt = t - &qt.p;
    let dist_a_p = spectral_norm(&(a - p))?;
    let dist_a_t = spectral_norm(&a_minus_t)?;
    let dist_p_t = spectral_norm(&(p - t))?;
    let dist_t_qt = spectral_norm(&op.apply_dense(&t_minus_qt)?)?;

    let (eps, epsilon_narrow) = match choice {
        EpsilonChoice::Asserted(e) => (e, None),
        EpsilonChoice::Empirical => {
            let narrow = certify_range(op, a)?.epsilon_emp;
            let n = a.ncols();
            let mut union = Dense::zeros(a.nrows(), 3 * n);
            union.columns_mut(0, n).copy_from(a);
            union.columns_mut(n, n).copy_from(&a_minus_t);
            union.columns_mut(2 * n, n).copy_from(&t_minus_qt);
            let wide = certify_range(op, &union)?.epsilon_emp.max(narrow);
            (wide, Some(narrow))
        }
    };
    let (lower, upper, sketch_polar) = sandwich_reports(dist_a_p, dist_a_t, dist_t_qt, eps, op);
    let narrow_violation = epsilon_narrow.is_some_and(|e| {
        let (nl, nu, _) = sandwich_reports(dist_a_p, dist_a_t, dist_t_qt, e, op);
        lower.pass && upper.pass && !(nl.pass && nu.pass)
    });
    Ok(SandwichReport {
        dist_a_p,
        dist_a_t,
        dist_p_t,
        dist_t_qt,
        epsilon: eps,
        epsilon_narrow,
        lower,
        upper,
        sketch_polar,
        narrow_violation,
    })
}

/// Writes reports as CSV with a header row.
pub fn write_reports_csv<W: Write>(out: W, reports: &[BoundReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one JSON object per line.
pub fn write_reports_jsonl<W: Write>(mut out: W, reports: &[BoundReport]) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}
