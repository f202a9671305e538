//! Oblivious subspace-embedding operators `S: R^m -> R^s`.
//!
//! Three families are provided:
//!
//! * `gaussian`: i.i.d. `N(0, 1/s)` entries, so `E‖Sv‖² = ‖v‖²`.
//! * `srtt`: `S = √(m/s)·D·F·E` with a Rademacher sign diagonal `E`, the
//!   orthonormal DCT-II `F` and uniform row sampling `D` without replacement.
//!   At `s = m` the operator is exactly orthogonal.
//! * `sparse-sign`: every column holds `ζ = min(8, s)` entries `±1/√ζ` in
//!   distinct rows.
//!
//! # Randomness
//!
//! All draws come from `ChaCha8Rng` seeded with `seed_from_u64(seed)`.
//! Gaussian column `i` uses stream `i` of that generator, so any column can
//! be regenerated independently and operators too large to store are built
//! lazily with identical values. The other kinds draw sequentially from
//! stream 0. Equal `(kind, s, m, seed)` therefore give bit-identical
//! operators on every platform.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dct::{dct2_reference_rows, Dct2};
use crate::error::{Error, Result};
use crate::kernels::{jacobi_svd, orthonormal_basis, orthonormality_defect};
use crate::matrix::{CsrMatrix, Dense, MatrixHandle};

/// Gaussian operators with at most this many entries keep a dense table.
const GAUSSIAN_TABLE_LIMIT: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchKind {
    Gaussian,
    Srtt,
    SparseSign,
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::Srtt => "srtt",
            SketchKind::SparseSign => "sparse-sign",
        })
    }
}

impl FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(SketchKind::Gaussian),
            "srtt" => Ok(SketchKind::Srtt),
            "sparse-sign" | "sparse_sign" => Ok(SketchKind::SparseSign),
            other => Err(Error::Precondition(format!("unknown sketch kind '{other}'"))),
        }
    }
}

/// Target distortion `epsilon`, failure probability `delta`, subspace
/// dimension `k` and ambient dimension `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingSpec {
    pub epsilon: f64,
    pub delta: f64,
    pub k: usize,
    pub m: usize,
    pub kind: SketchKind,
}

impl EmbeddingSpec {
    pub fn new(epsilon: f64, delta: f64, k: usize, m: usize, kind: SketchKind) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Precondition(format!("epsilon = {epsilon} not in (0, 1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Precondition(format!("delta = {delta} not in (0, 1)")));
        }
        if k == 0 || k > m {
            return Err(Error::InvalidDimension(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
        }
        Ok(Self {
            epsilon,
            delta,
            k,
            m,
            kind,
        })
    }
}

/// Sketch dimension with the default constant `c = 1`.
pub fn sketch_dim(spec: &EmbeddingSpec) -> usize {
    sketch_dim_with(spec, 1.0)
}

/// Sketch dimension for `spec`, always clamped to `[k, m]`.
///
/// * gaussian: `⌈ε⁻²·ln(1/δ)·ln(max(k, 2))⌉`
/// * srtt, sparse-sign: `max(2k, ⌈c·ε⁻²·k⌉)`; `c` is ignored for gaussian.
///
/// The srtt rule drops the `1/δ` factor of the usual practical heuristic,
/// which diverges as `δ -> 0`; tune `c` instead.
pub fn sketch_dim_with(spec: &EmbeddingSpec, c: f64) -> usize {
    let inv_eps2 = 1.0 / (spec.epsilon * spec.epsilon);
    let raw = match spec.kind {
        SketchKind::Gaussian => {
            (inv_eps2 * (1.0 / spec.delta).ln() * (spec.k.max(2) as f64).ln()).ceil() as usize
        }
        SketchKind::Srtt | SketchKind::SparseSign => {
            (2 * spec.k).max((c * inv_eps2 * spec.k as f64).ceil() as usize)
        }
    };
    raw.clamp(spec.k, spec.m)
}

/// Derives an independent seed for repetition `stream` of a master seed
/// (SplitMix64 finalizer applied to `master + φ·(stream + 1)`).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

enum Repr {
    Gaussian {
        /// s×m, present when small enough.
        table: Option<Dense>,
    },
    Srtt {
        signs: Vec<f64>,
        /// Sorted, distinct.
        rows: Vec<usize>,
        scale: f64,
        dct: Dct2,
    },
    SparseSign {
        zeta: usize,
        /// `zeta` row positions per column.
        rows: Vec<u32>,
        vals: Vec<f64>,
    },
}

/// An immutable sketching operator. Cloning is cheap.
#[derive(Clone)]
pub struct SketchOperator {
    kind: SketchKind,
    s: usize,
    m: usize,
    seed: u64,
    repr: Arc<Repr>,
}

impl fmt::Debug for SketchOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SketchOperator")
            .field("kind", &self.kind)
            .field("s", &self.s)
            .field("m", &self.m)
            .field("seed", &self.seed)
            .finish()
    }
}

fn gaussian_column(seed: u64, s: usize, col: usize, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(col as u64);
    let scale = 1.0 / (s as f64).sqrt();
    for o in out.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *o = z * scale;
    }
}

/// Same as [`SketchOperator::new`].
pub fn build_sketch(kind: SketchKind, s: usize, m: usize, seed: u64) -> Result<SketchOperator> {
    SketchOperator::new(kind, s, m, seed)
}

impl SketchOperator {
    pub fn new(kind: SketchKind, s: usize, m: usize, seed: u64) -> Result<Self> {
        if s == 0 || s > m {
            return Err(Error::InvalidDimension(format!(
                "sketch dimension s = {s} must satisfy 1 <= s <= m = {m}"
            )));
        }
        let repr = match kind {
            SketchKind::Gaussian => {
                let table = (s * m <= GAUSSIAN_TABLE_LIMIT).then(|| {
                    let mut t = Dense::zeros(s, m);
                    for (i, col) in t.as_mut_slice().chunks_mut(s).enumerate() {
                        gaussian_column(seed, s, i, col);
                    }
                    t
                });
                Repr::Gaussian { table }
            }
            SketchKind::Srtt => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let signs = (0..m)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let mut rows = index::sample(&mut rng, m, s).into_vec();
                rows.sort_unstable();
                Repr::Srtt {
                    signs,
                    rows,
                    scale: (m as f64 / s as f64).sqrt(),
                    dct: Dct2::new(m),
                }
            }
            SketchKind::SparseSign => {
                let zeta = s.min(8);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let val = 1.0 / (zeta as f64).sqrt();
                let mut rows = Vec::with_capacity(m * zeta);
                let mut vals = Vec::with_capacity(m * zeta);
                for _ in 0..m {
                    for r in index::sample(&mut rng, s, zeta) {
                        rows.push(r as u32);
                        vals.push(if rng.random::<bool>() { val } else { -val });
                    }
                }
                Repr::SparseSign { zeta, rows, vals }
            }
        };
        Ok(Self {
            kind,
            s,
            m,
            seed,
            repr: Arc::new(repr),
        })
    }

    pub fn kind(&self) -> SketchKind {
        self.kind
    }

    /// Sketch (output) dimension.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Ambient (input) dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Nonzeros per column of a sparse-sign operator.
    pub fn zeta(&self) -> Option<usize> {
        match &*self.repr {
            Repr::SparseSign { zeta, .. } => Some(*zeta),
            _ => None,
        }
    }

    /// Row sample of an srtt operator.
    pub fn sampled_rows(&self) -> Option<&[usize]> {
        match &*self.repr {
            Repr::Srtt { rows, .. } => Some(rows),
            _ => None,
        }
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.m {
            return Err(Error::shape(format!("{} rows", self.m), format!("{rows} rows")));
        }
        Ok(())
    }

    /// `S x` for a single vector.
    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_rows(x.len())?;
        let xm = Dense::from_column_slice(self.m, 1, x);
        Ok(self.apply_dense(&xm)?.as_slice().to_vec())
    }

    pub fn apply(&self, x: &MatrixHandle) -> Result<Dense> {
        match x {
            MatrixHandle::Dense(d) => self.apply_dense(d),
            MatrixHandle::Csr(c) => self.apply_csr(c),
        }
    }

    /// `S X` for a dense `X` with `m` rows.
    pub fn apply_dense(&self, x: &Dense) -> Result<Dense> {
        self.check_rows(x.nrows())?;
        let n = x.ncols();
        let s = self.s;
        let mut out = Dense::zeros(s, n);
        match &*self.repr {
            Repr::Gaussian { table: Some(t) } => {
                out = t * x;
            }
            Repr::Gaussian { table: None } => {
                let mut col = vec![0.0; s];
                for i in 0..self.m {
                    if (0..n).all(|j| x[(i, j)] == 0.0) {
                        continue;
                    }
                    gaussian_column(self.seed, s, i, &mut col);
                    for j in 0..n {
                        let a = x[(i, j)];
                        if a != 0.0 {
                            let oc = &mut out.as_mut_slice()[j * s..(j + 1) * s];
                            for (o, c) in oc.iter_mut().zip(&col) {
                                *o += a * c;
                            }
                        }
                    }
                }
            }
            Repr::Srtt {
                signs,
                rows,
                scale,
                dct,
            } => {
                let m = self.m;
                out.as_mut_slice()
                    .par_chunks_mut(s)
                    .zip(x.as_slice().par_chunks(m))
                    .for_each(|(oc, xc)| {
                        let y: Vec<f64> = xc.iter().zip(signs).map(|(a, e)| a * e).collect();
                        dct.transform_rows(&y, rows, oc);
                        for o in oc.iter_mut() {
                            *o *= scale;
                        }
                    });
            }
            Repr::SparseSign { zeta, rows, vals } => {
                let data = out.as_mut_slice();
                for j in 0..n {
                    let xc = x.column(j);
                    let oc = &mut data[j * s..(j + 1) * s];
                    for (i, &a) in xc.iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        for t in i * zeta..(i + 1) * zeta {
                            oc[rows[t] as usize] += vals[t] * a;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `S X` for a CSR `X`. Gaussian and sparse-sign kinds touch only the
    /// stored entries; srtt transforms one densified column at a time.
    pub fn apply_csr(&self, x: &CsrMatrix) -> Result<Dense> {
        self.check_rows(x.nrows())?;
        let n = x.ncols();
        let s = self.s;
        let mut out = Dense::zeros(s, n);
        match &*self.repr {
            Repr::Gaussian { table } => {
                let mut col = vec![0.0; s];
                let data = out.as_mut_slice();
                for i in 0..self.m {
                    let (cols, vals) = x.row(i);
                    if cols.is_empty() {
                        continue;
                    }
                    let col: &[f64] = match table {
                        Some(t) => &t.as_slice()[i * s..(i + 1) * s],
                        None => {
                            gaussian_column(self.seed, s, i, &mut col);
                            &col
                        }
                    };
                    for (&j, &a) in cols.iter().zip(vals) {
                        for (o, c) in data[j * s..(j + 1) * s].iter_mut().zip(col) {
                            *o += a * c;
                        }
                    }
                }
            }
            Repr::Srtt { .. } => {
                let columns = x.columns();
                let m = self.m;
                let mut dense_col = Dense::zeros(m, 1);
                for (j, entries) in columns.iter().enumerate() {
                    dense_col.fill(0.0);
                    for &(i, v) in entries {
                        dense_col[(i, 0)] = v;
                    }
                    let sc = self.apply_dense(&dense_col)?;
                    out.set_column(j, &sc.column(0));
                }
            }
            Repr::SparseSign { zeta, rows, vals } => {
                let data = out.as_mut_slice();
                for i in 0..self.m {
                    let (cols, xv) = x.row(i);
                    for (&j, &a) in cols.iter().zip(xv) {
                        for t in i * zeta..(i + 1) * zeta {
                            data[j * s + rows[t] as usize] += vals[t] * a;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Slow reference application: the direct `O(m)`-per-row cosine sum for
    /// srtt, and a dense product with [`Self::to_dense`] otherwise.
    pub fn apply_reference(&self, x: &Dense) -> Result<Dense> {
        self.check_rows(x.nrows())?;
        match &*self.repr {
            Repr::Srtt {
                signs, rows, scale, ..
            } => {
                let mut out = Dense::zeros(self.s, x.ncols());
                for j in 0..x.ncols() {
                    let y: Vec<f64> = x.column(j).iter().zip(signs).map(|(a, e)| a * e).collect();
                    let z = dct2_reference_rows(&y, rows);
                    for (r, v) in z.into_iter().enumerate() {
                        out[(r, j)] = scale * v;
                    }
                }
                Ok(out)
            }
            _ => Ok(self.to_dense() * x),
        }
    }

    /// Materializes `S` as a dense s×m matrix.
    pub fn to_dense(&self) -> Dense {
        match &*self.repr {
            Repr::Gaussian { table: Some(t) } => t.clone(),
            Repr::Gaussian { table: None } => {
                let mut t = Dense::zeros(self.s, self.m);
                for (i, col) in t.as_mut_slice().chunks_mut(self.s).enumerate() {
                    gaussian_column(self.seed, self.s, i, col);
                }
                t
            }
            _ => self
                .apply_dense(&Dense::identity(self.m, self.m))
                .expect("identity has m rows"),
        }
    }
}

/// Measured distortion of an operator on one subspace.
///
/// `epsilon_emp = max(σ_max(SU)² - 1, 1 - σ_min(SU)²)` for an orthonormal
/// basis `U`: the smallest `ε` with
/// `(1-ε)‖v‖² <= ‖Sv‖² <= (1+ε)‖v‖²` on `Range(U)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCertificate {
    pub epsilon_emp: f64,
    pub subspace_dim: usize,
    pub sigma_min_su: f64,
    pub sigma_max_su: f64,
}

impl EmbeddingCertificate {
    /// The identity certificate: no distortion on a zero-dimensional space.
    pub fn trivial() -> Self {
        Self {
            epsilon_emp: 0.0,
            subspace_dim: 0,
            sigma_min_su: 1.0,
            sigma_max_su: 1.0,
        }
    }
}

/// Tightest distortion of `op` over `Range(u)`; `u` must have orthonormal
/// columns to `1e-10`.
pub fn empirical_epsilon(op: &SketchOperator, u: &Dense) -> Result<EmbeddingCertificate> {
    if u.nrows() != op.m() {
        return Err(Error::shape(format!("{} rows", op.m()), format!("{} rows", u.nrows())));
    }
    let k = u.ncols();
    if k == 0 {
        return Ok(EmbeddingCertificate::trivial());
    }
    let defect = orthonormality_defect(u)?;
    if defect > 1e-10 {
        return Err(Error::Precondition(format!(
            "basis is not orthonormal: ‖U^T U - I‖_2 = {defect:e}"
        )));
    }
    let su = op.apply_dense(u)?;
    let sigma = jacobi_svd(&su)?.sigma;
    let sigma_max = sigma[0];
    // SU has at most s nonzero singular values.
    let sigma_min = if k > op.s() { 0.0 } else { *sigma.last().unwrap() };
    let epsilon_emp = (sigma_max * sigma_max - 1.0).max(1.0 - sigma_min * sigma_min).max(0.0);
    Ok(EmbeddingCertificate {
        epsilon_emp,
        subspace_dim: k,
        sigma_min_su: sigma_min,
        sigma_max_su: sigma_max,
    })
}

/// Relative threshold used to extract numerical ranges before certifying.
pub const RANGE_RTOL: f64 = 1e-12;

/// Certificate over the numerical range of `x` (singular values above
/// `RANGE_RTOL·σ_1`).
pub fn certify_range(op: &SketchOperator, x: &Dense) -> Result<EmbeddingCertificate> {
    let basis = orthonormal_basis(x, RANGE_RTOL)?;
    empirical_epsilon(op, &basis)
}

/// Result of [`pairwise_cosine_audit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineAudit {
    /// `max_{i≠j} |cos∠(p_i, p_j)|`.
    pub max_abs_cos: f64,
    /// Distortion over `Range(P)`.
    pub certificate: EmbeddingCertificate,
    /// `max_abs_cos <= epsilon_emp`.
    pub within_bound: bool,
}

/// For `P` with sketch-orthonormal columns, every pair of columns has
/// `|cos∠(p_i, p_j)| <= ε` whenever `S` has distortion `ε` on their span.
/// The certificate is measured over `Range(P)`, which contains every
/// `p_i ± p_j`, so the flag is a deterministic check.
pub fn pairwise_cosine_audit(op: &SketchOperator, p: &Dense) -> Result<CosineAudit> {
    let n = p.ncols();
    let norms: Vec<f64> = (0..n).map(|j| p.column(j).norm()).collect();
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::DegenerateInput(format!("column {} of P is zero", j + 1)));
    }
    let sp = op.apply_dense(p)?;
    let defect = orthonormality_defect(&sp)?;
    if defect > 1e-8 {
        return Err(Error::Precondition(format!(
            "P is not sketch-orthonormal: ‖(SP)^T SP - I‖_2 = {defect:e}"
        )));
    }
    let gram = p.tr_mul(p);
    let mut max_abs_cos = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            max_abs_cos = max_abs_cos.max((gram[(i, j)] / (norms[i] * norms[j])).abs());
        }
    }
    let certificate = certify_range(op, p)?;
    Ok(CosineAudit {
        max_abs_cos,
        certificate,
        within_bound: max_abs_cos <= certificate.epsilon_emp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::householder_qr;

    fn seeded(m: usize, n: usize, seed: u64) -> Dense {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dense::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn sketch_dim_examples() {
        let spec = EmbeddingSpec::new(0.5, 1e-6, 300, 300_000, SketchKind::Gaussian).unwrap();
        assert_eq!(sketch_dim(&spec), 316);
        let spec = EmbeddingSpec::new(0.5, 0.01, 50, 50, SketchKind::Srtt).unwrap();
        assert_eq!(sketch_dim(&spec), 50);
        let spec = EmbeddingSpec::new(0.5, 0.01, 50, 50, SketchKind::Gaussian).unwrap();
        assert_eq!(sketch_dim(&spec), 50);
        let spec = EmbeddingSpec::new(0.5, 0.01, 40, 10_000, SketchKind::Srtt).unwrap();
        assert_eq!(sketch_dim(&spec), 160);
        assert_eq!(sketch_dim_with(&spec, 0.1), 80);
    }

    #[test]
    fn sketch_dim_never_below_k() {
        let spec = EmbeddingSpec::new(0.99, 0.9, 500, 10_000, SketchKind::Gaussian).unwrap();
        assert_eq!(sketch_dim(&spec), 500);
    }

    #[test]
    fn spec_validation() {
        assert!(EmbeddingSpec::new(1.0, 0.1, 1, 2, SketchKind::Srtt).is_err());
        assert!(EmbeddingSpec::new(0.5, 0.0, 1, 2, SketchKind::Srtt).is_err());
        assert!(EmbeddingSpec::new(0.5, 0.1, 3, 2, SketchKind::Srtt).is_err());
        assert!(EmbeddingSpec::new(0.5, 0.1, 0, 2, SketchKind::Srtt).is_err());
    }

    #[test]
    fn kind_round_trips_through_strings() {
        for k in [SketchKind::Gaussian, SketchKind::Srtt, SketchKind::SparseSign] {
            assert_eq!(k.to_string().parse::<SketchKind>().unwrap(), k);
        }
        assert!("fourier".parse::<SketchKind>().is_err());
    }

    #[test]
    fn rejects_bad_dimensions() {
        for kind in [SketchKind::Gaussian, SketchKind::Srtt, SketchKind::SparseSign] {
            assert!(matches!(SketchOperator::new(kind, 0, 5, 1), Err(Error::InvalidDimension(_))));
            assert!(matches!(SketchOperator::new(kind, 6, 5, 1), Err(Error::InvalidDimension(_))));
        }
    }

    #[test]
    fn full_srtt_is_orthogonal() {
        let op = SketchOperator::new(SketchKind::Srtt, 16, 16, 42).unwrap();
        let s = op.to_dense();
        assert!((s.tr_mul(&s) - Dense::identity(16, 16)).amax() < 1e-13);
    }

    #[test]
    fn srtt_rows_are_distinct() {
        let op = SketchOperator::new(SketchKind::Srtt, 50, 60, 3).unwrap();
        let rows = op.sampled_rows().unwrap();
        assert_eq!(rows.len(), 50);
        assert!(rows.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sparse_sign_columns() {
        let op = SketchOperator::new(SketchKind::SparseSign, 16, 100, 1).unwrap();
        assert_eq!(op.zeta(), Some(8));
        let s = op.to_dense();
        for j in 0..100 {
            let nz: Vec<f64> = s.column(j).iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nz.len(), 8);
            assert!(nz.iter().all(|v| (v.abs() - 1.0 / 8f64.sqrt()).abs() < 1e-15));
        }
        let small = SketchOperator::new(SketchKind::SparseSign, 3, 10, 1).unwrap();
        assert_eq!(small.zeta(), Some(3));
    }

    #[test]
    fn gaussian_identity_gives_table() {
        let op = SketchOperator::new(SketchKind::Gaussian, 6, 8, 3).unwrap();
        let table = op.to_dense();
        let mut direct = Dense::zeros(6, 8);
        for i in 0..8 {
            let mut c = vec![0.0; 6];
            gaussian_column(3, 6, i, &mut c);
            direct.set_column(i, &nalgebra::DVector::from_vec(c));
        }
        assert_eq!(table, direct);
        assert_eq!(op.apply_dense(&Dense::identity(8, 8)).unwrap(), direct);
    }

    #[test]
    fn zero_input_gives_zero() {
        for kind in [SketchKind::Gaussian, SketchKind::Srtt, SketchKind::SparseSign] {
            let op = SketchOperator::new(kind, 5, 12, 9).unwrap();
            assert_eq!(op.apply_dense(&Dense::zeros(12, 3)).unwrap(), Dense::zeros(5, 3));
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let op = SketchOperator::new(SketchKind::Gaussian, 3, 10, 0).unwrap();
        assert!(matches!(op.apply_dense(&Dense::zeros(9, 2)), Err(Error::Shape { .. })));
        assert!(op.apply_vec(&[1.0; 4]).is_err());
    }

    #[test]
    fn sparse_and_dense_inputs_agree() {
        let d = Dense::from_fn(40, 5, |i, j| if (3 * i + j) % 4 == 0 { (i as f64) - j as f64 } else { 0.0 });
        let c = CsrMatrix::from_dense(&d);
        for kind in [SketchKind::Gaussian, SketchKind::Srtt, SketchKind::SparseSign] {
            let op = SketchOperator::new(kind, 10, 40, 5).unwrap();
            let a = op.apply_dense(&d).unwrap();
            let b = op.apply_csr(&c).unwrap();
            assert!((a - b).amax() < 1e-13, "{kind}");
        }
    }

    #[test]
    fn lazy_gaussian_matches_table() {
        // Large enough to skip the dense table.
        let m = (GAUSSIAN_TABLE_LIMIT / 4) + 1;
        let op = SketchOperator::new(SketchKind::Gaussian, 4, m, 17).unwrap();
        let mut x = Dense::zeros(m, 1);
        x[(0, 0)] = 1.0;
        x[(m - 1, 0)] = -2.0;
        let y = op.apply_dense(&x).unwrap();
        let mut c0 = vec![0.0; 4];
        let mut c1 = vec![0.0; 4];
        gaussian_column(17, 4, 0, &mut c0);
        gaussian_column(17, 4, m - 1, &mut c1);
        for r in 0..4 {
            assert_eq!(y[(r, 0)], c0[r] - 2.0 * c1[r]);
        }
    }

    #[test]
    fn srtt_fast_matches_reference() {
        for m in [7usize, 13, 64, 97, 128, 150, 210] {
            let op = SketchOperator::new(SketchKind::Srtt, m / 2 + 1, m, m as u64).unwrap();
            let x = seeded(m, 3, 1);
            let fast = op.apply_dense(&x).unwrap();
            let slow = op.apply_reference(&x).unwrap();
            assert!((&fast - &slow).norm() <= 1e-13 * slow.norm(), "m = {m}");
        }
    }

    #[test]
    fn certificate_of_full_srtt_is_zero() {
        let op = SketchOperator::new(SketchKind::Srtt, 32, 32, 8).unwrap();
        let (u, _) = householder_qr(&seeded(32, 6, 2)).unwrap();
        assert!(empirical_epsilon(&op, &u).unwrap().epsilon_emp <= 1e-12);
    }

    #[test]
    fn certificate_of_single_vector() {
        let op = SketchOperator::new(SketchKind::Gaussian, 10, 30, 4).unwrap();
        let mut u = seeded(30, 1, 7);
        u /= u.norm();
        let cert = empirical_epsilon(&op, &u).unwrap();
        let su = op.apply_dense(&u).unwrap().norm_squared();
        assert!((cert.epsilon_emp - (su - 1.0).abs()).abs() < 1e-14);
    }

    #[test]
    fn certificate_rejects_non_orthonormal() {
        let op = SketchOperator::new(SketchKind::Gaussian, 10, 30, 4).unwrap();
        let u = seeded(30, 2, 7);
        assert!(matches!(empirical_epsilon(&op, &u), Err(Error::Precondition(_))));
    }

    #[test]
    fn cosine_audit_on_full_srtt() {
        let op = SketchOperator::new(SketchKind::Srtt, 40, 40, 8).unwrap();
        let (q, _) = householder_qr(&seeded(40, 5, 3)).unwrap();
        let audit = pairwise_cosine_audit(&op, &q).unwrap();
        assert!(audit.max_abs_cos <= 1e-10);
    }

    #[test]
    fn cosine_audit_rejects_degenerate() {
        let op = SketchOperator::new(SketchKind::Srtt, 40, 40, 8).unwrap();
        let mut p = Dense::zeros(40, 2);
        p[(0, 0)] = 1.0;
        assert!(matches!(pairwise_cosine_audit(&op, &p), Err(Error::DegenerateInput(_))));
        let mut dup = Dense::zeros(40, 2);
        dup[(0, 0)] = 1.0;
        dup[(0, 1)] = 1.0;
        assert!(matches!(pairwise_cosine_audit(&op, &dup), Err(Error::Precondition(_))));
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|r| derive_seed(7, r)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_eq!(derive_seed(7, 3), seeds[3]);
    }
}
