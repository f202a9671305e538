//! The `spectrum`, `ortho`, `nearest` and `gen` commands.
//!
//! Repetition `r` of the `j`-th sketch size uses the sketch seed
//! `derive_seed(seed, (j << 32) | r)`. Repetitions run in parallel and are
//! collected in `(s, rep)` order before anything is written.

use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use stsvd::kernels::{jacobi_svd, leading_singular_values, orthonormality_defect, spectral_norm, SPECTRAL_CROSSOVER};
use stsvd::mmio::write_matrix_market;
use stsvd::nearest::{loss_ratio, nearest_orthogonal, nearest_sts_orthogonal, sandwich_report, EpsilonChoice, BOUND_SLACK};
use stsvd::sketch::{derive_seed, empirical_epsilon, RANGE_RTOL};
use stsvd::stssvd::{compare_spectra, randomized_singular_values, sts_svd};
use stsvd::{Dense, EmbeddingCertificate, MatrixHandle, Result, SketchOperator, SvdFactors};

use crate::config::{ExperimentConfig, MatrixSource};

/// Number of leading singular values shown by `spectrum`.
pub const SPECTRUM_ROWS: usize = 40;

/// Relative threshold on `θ_k / θ_1` defining the numerical rank reported
/// by `spectrum`.
pub const RANK_THRESHOLD: f64 = 1e-12;

/// Oversampling of the randomized SVD reference in `spectrum`.
pub const REFERENCE_OVERSAMPLE: usize = 5;

/// Output of one command: the CSV table, its JSON-lines mirror and a run
/// summary.
#[derive(Debug, Clone)]
pub struct Report {
    pub csv: Vec<u8>,
    pub jsonl: Vec<u8>,
    pub summary: serde_json::Value,
    /// Bound checks evaluated.
    pub checks: usize,
    /// Checks that failed.
    pub violations: usize,
}

impl Report {
    fn new<R: Serialize>(rows: &[R], summary: serde_json::Value, checks: usize, violations: usize) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(io_error)?;
        }
        let csv = w.into_inner().map_err(|e| io_error(e.into_error()))?;
        let mut jsonl = Vec::new();
        for r in rows {
            serde_json::to_writer(&mut jsonl, r).map_err(|e| stsvd::Error::Io(e.into()))?;
            jsonl.push(b'\n');
        }
        Ok(Self {
            csv,
            jsonl,
            summary,
            checks,
            violations,
        })
    }

    /// Writes `path`, the `.jsonl` mirror next to it and `.summary.json`.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.csv)?;
        std::fs::write(path.with_extension("jsonl"), &self.jsonl)?;
        let summary = serde_json::to_vec_pretty(&self.summary).map_err(|e| stsvd::Error::Io(e.into()))?;
        std::fs::write(path.with_extension("summary.json"), summary)?;
        Ok(())
    }
}

fn io_error(e: impl std::fmt::Display) -> stsvd::Error {
    stsvd::Error::Io(std::io::Error::other(e.to_string()))
}

fn timed<T>(record: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    let secs = if record { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok((out, secs))
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.into_iter().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

#[derive(Debug, Clone, Copy)]
struct Job {
    size_index: usize,
    s: usize,
    rep: usize,
    seed: u64,
}

fn jobs(cfg: &ExperimentConfig, sizes: &[usize]) -> Vec<Job> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(j, &s)| {
            (0..cfg.reps).map(move |rep| Job {
                size_index: j,
                s,
                rep,
                seed: derive_seed(cfg.seed, ((j as u64) << 32) | rep as u64),
            })
        })
        .collect()
}

fn load(cfg: &ExperimentConfig) -> Result<(MatrixHandle, Vec<usize>)> {
    cfg.validate()?;
    let a = cfg.source.load()?;
    if !a.is_finite() {
        return Err(stsvd::Error::DegenerateInput("matrix has non-finite entries".into()));
    }
    let sizes = cfg.resolve_sizes(a.nrows(), a.ncols())?;
    info!(
        "{}: {}x{}, {} sketch, s = {:?}, {} reps",
        cfg.source.label(),
        a.nrows(),
        a.ncols(),
        cfg.kind,
        sizes,
        cfg.reps
    );
    Ok((a, sizes))
}

fn certificate(op: &SketchOperator, basis: &Dense) -> Result<EmbeddingCertificate> {
    if basis.ncols() == 0 {
        Ok(EmbeddingCertificate::trivial())
    } else {
        empirical_epsilon(op, basis)
    }
}

#[derive(Debug, Serialize)]
struct SpectrumRow {
    s: usize,
    index: usize,
    sigma_full: Option<f64>,
    theta: Option<f64>,
    sigma_reference_method: Option<f64>,
    time_ms: f64,
    rank: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumRawRow {
    s: usize,
    rep: usize,
    seed: u64,
    index: usize,
    sigma_full: Option<f64>,
    theta: Option<f64>,
    sigma_reference_method: Option<f64>,
    epsilon_emp: Option<f64>,
    in_bound: Option<bool>,
    time_ms: f64,
}

struct SpectrumRep {
    rank: usize,
    theta: Vec<f64>,
    reference: Vec<f64>,
    time_ms: f64,
    reference_ms: f64,
    epsilon_emp: Option<f64>,
    flags: Option<Vec<bool>>,
    undersized: bool,
}

/// Leading `S^T S`-singular values against the full spectrum and a
/// randomized SVD reference, one row per index and sketch size.
///
/// All nonzero `θ_k` up to `min(s, 40)` are kept unless `rtol` is set.
/// `theta` is averaged over the repetitions that produced that index and is
/// empty when none did; `rank` is the mean count of
/// `θ_k > RANK_THRESHOLD·θ_1`. When the full SVD
/// is affordable every repetition also checks
/// `√(1-ε)σ_k <= θ_k <= √(1+ε)σ_k` at the distortion measured over
/// `Range(A)`, and a failing repetition counts as one violation.
pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Report> {
    let (a, sizes) = load(cfg)?;
    let (m, n) = (a.nrows(), a.ncols());
    let dense = a.to_dense();

    let exact = m.min(n) <= SPECTRAL_CROSSOVER;
    let ((full, sigma_full, residual), full_secs) = timed(cfg.record_times, || {
        if exact {
            let f = jacobi_svd(&dense)?;
            let sigma: Vec<f64> = f.sigma.iter().take(SPECTRUM_ROWS).copied().collect();
            Ok((Some(f), sigma, 0.0))
        } else {
            let (sigma, residual) = leading_singular_values(&dense, SPECTRUM_ROWS)?;
            Ok((None::<SvdFactors>, sigma, residual))
        }
    })?;
    let basis = full.as_ref().map(|f| f.u.columns(0, f.rank(RANGE_RTOL)).into_owned());

    let all = jobs(cfg, &sizes);
    let reps: Vec<SpectrumRep> = all
        .par_iter()
        .map(|job| {
            let op = SketchOperator::new(cfg.kind, job.s, m, job.seed)?;
            let (f, secs) = timed(cfg.record_times, || sts_svd(&a, &op, Some(cfg.rtol.unwrap_or(0.0))))?;
            let ell = job.s.min(SPECTRUM_ROWS);
            let cutoff = RANK_THRESHOLD * f.theta.first().copied().unwrap_or(0.0);
            let (reference, ref_secs) = timed(cfg.record_times, || {
                randomized_singular_values(&a, ell, REFERENCE_OVERSAMPLE, derive_seed(job.seed, 1))
            })?;
            let (epsilon_emp, flags) = match (&full, &basis) {
                (Some(full), Some(basis)) => {
                    let cert = certificate(&op, basis)?;
                    let cmp = compare_spectra(&f, full, &cert)?;
                    (Some(cert.epsilon_emp), Some(cmp.flags))
                }
                _ => (None, None),
            };
            Ok(SpectrumRep {
                rank: f.theta.iter().filter(|&&t| t > cutoff).count(),
                theta: f.theta.iter().take(ell).copied().collect(),
                reference,
                time_ms: secs * 1e3,
                reference_ms: ref_secs * 1e3,
                epsilon_emp,
                flags,
                undersized: f.undersized_sketch,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut raw_rows = Vec::new();
    let mut per_size = Vec::new();
    let mut violations = 0;
    let mut checks = 0;
    let shown = n.min(m).min(SPECTRUM_ROWS);
    for (j, &s) in sizes.iter().enumerate() {
        let group: Vec<(&Job, &SpectrumRep)> = all
            .iter()
            .zip(&reps)
            .filter(|(job, _)| job.size_index == j)
            .collect();
        let ranks: Vec<usize> = group.iter().map(|(_, r)| r.rank).collect();
        let mean_rank = mean(ranks.iter().map(|&r| r as f64)).unwrap_or(0.0);
        let time_ms = mean(group.iter().map(|(_, r)| r.time_ms)).unwrap_or(0.0);
        let failed = group
            .iter()
            .filter(|(_, r)| r.flags.as_ref().is_some_and(|f| !f.iter().all(|&b| b)))
            .count();
        checks += group.iter().filter(|(_, r)| r.flags.is_some()).count();
        violations += failed;
        for i in 0..shown {
            rows.push(SpectrumRow {
                s,
                index: i + 1,
                sigma_full: sigma_full.get(i).copied(),
                theta: mean(group.iter().filter_map(|(_, r)| r.theta.get(i).copied())),
                sigma_reference_method: mean(group.iter().filter_map(|(_, r)| r.reference.get(i).copied())),
                time_ms,
                rank: mean_rank,
            });
        }
        if cfg.raw {
            for (job, r) in &group {
                for i in 0..shown {
                    raw_rows.push(SpectrumRawRow {
                        s,
                        rep: job.rep,
                        seed: job.seed,
                        index: i + 1,
                        sigma_full: sigma_full.get(i).copied(),
                        theta: r.theta.get(i).copied(),
                        sigma_reference_method: r.reference.get(i).copied(),
                        epsilon_emp: r.epsilon_emp,
                        in_bound: r.flags.as_ref().and_then(|f| f.get(i).copied()),
                        time_ms: r.time_ms,
                    });
                }
            }
        }
        let undersized = group.iter().filter(|(_, r)| r.undersized).count();
        if mean_rank == 0.0 {
            info!("s = {s}: r = 0, no nonzero S^T S-singular values");
        }
        per_size.push(json!({
            "s": s,
            "mean_rank": mean_rank,
            "min_rank": ranks.iter().min(),
            "max_rank": ranks.iter().max(),
            "undersized_sketch_reps": undersized,
            "sandwich_failures": failed,
            "time_sts_svd_ms": time_ms,
            "time_reference_ms": mean(group.iter().map(|(_, r)| r.reference_ms)).unwrap_or(0.0),
            "max_epsilon_emp": group.iter().filter_map(|(_, r)| r.epsilon_emp).reduce(f64::max),
        }));
    }
    let summary = json!({
        "command": "spectrum",
        "matrix": cfg.source.label(),
        "m": m,
        "n": n,
        "sketch": cfg.kind.to_string(),
        "reps": cfg.reps,
        "seed": cfg.seed,
        "sigma_full_method": if exact { "jacobi" } else { "pivoted-qr" },
        "sigma_full_residual": residual,
        "time_full_svd_ms": full_secs * 1e3,
        "sizes": per_size,
        "checks": checks,
        "violations": violations,
    });
    if cfg.raw {
        Report::new(&raw_rows, summary, checks, violations)
    } else {
        Report::new(&rows, summary, checks, violations)
    }
}

#[derive(Debug, Serialize)]
struct OrthoRow {
    s: usize,
    fro_loss: f64,
    two_loss: f64,
    time_s: f64,
    violations: usize,
}

#[derive(Debug, Serialize)]
struct OrthoRawRow {
    s: usize,
    rep: usize,
    seed: u64,
    rank: usize,
    fro_loss: f64,
    two_loss: f64,
    epsilon: f64,
    time_s: f64,
    pass: bool,
}

struct OrthoRep {
    rank: usize,
    fro_loss: f64,
    two_loss: f64,
    epsilon: f64,
    time_s: f64,
    pass: bool,
}

/// Loss of orthogonality `‖W^T W - I‖` of the `S^T S`-orthonormal factor.
///
/// Each repetition checks `‖·‖_F <= √r·ε/(1-ε)` and `‖·‖_2 <= ε/(1-ε)` at
/// the configured `ε`, or at the distortion measured over `Range(A)` when
/// none is configured. Failures are counted, not fatal.
pub fn cmd_ortho(cfg: &ExperimentConfig) -> Result<Report> {
    let (a, sizes) = load(cfg)?;
    let (m, n) = (a.nrows(), a.ncols());
    let basis = match cfg.epsilon {
        Some(_) => None,
        None => Some(stsvd::kernels::orthonormal_basis(&a.to_dense(), RANGE_RTOL)?),
    };

    let all = jobs(cfg, &sizes);
    let reps: Vec<OrthoRep> = all
        .par_iter()
        .map(|job| {
            let op = SketchOperator::new(cfg.kind, job.s, m, job.seed)?;
            let (f, secs) = timed(cfg.record_times, || sts_svd(&a, &op, cfg.rtol))?;
            let r = f.rank;
            if r < n {
                warn!("s = {}, rep {}: retained rank {r} < {n}", job.s, job.rep);
            }
            let defect = f.w.tr_mul(&f.w) - Dense::identity(r, r);
            let fro_loss = defect.norm();
            let two_loss = spectral_norm(&defect)?;
            let epsilon = match (&basis, cfg.epsilon) {
                (_, Some(e)) => e,
                (Some(b), None) => certificate(&op, b)?.epsilon_emp,
                (None, None) => unreachable!(),
            };
            let ratio = loss_ratio(epsilon, f.sketch_orthogonality_defect()?);
            let pass = fro_loss <= (r as f64).sqrt() * ratio + BOUND_SLACK && two_loss <= ratio + BOUND_SLACK;
            Ok(OrthoRep {
                rank: r,
                fro_loss,
                two_loss,
                epsilon,
                time_s: secs,
                pass,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut raw_rows = Vec::new();
    let mut violations = 0;
    for (j, &s) in sizes.iter().enumerate() {
        let group: Vec<(&Job, &OrthoRep)> = all.iter().zip(&reps).filter(|(job, _)| job.size_index == j).collect();
        let failed = group.iter().filter(|(_, r)| !r.pass).count();
        violations += failed;
        rows.push(OrthoRow {
            s,
            fro_loss: mean(group.iter().map(|(_, r)| r.fro_loss)).unwrap_or(0.0),
            two_loss: mean(group.iter().map(|(_, r)| r.two_loss)).unwrap_or(0.0),
            time_s: mean(group.iter().map(|(_, r)| r.time_s)).unwrap_or(0.0),
            violations: failed,
        });
        for (job, r) in &group {
            raw_rows.push(OrthoRawRow {
                s,
                rep: job.rep,
                seed: job.seed,
                rank: r.rank,
                fro_loss: r.fro_loss,
                two_loss: r.two_loss,
                epsilon: r.epsilon,
                time_s: r.time_s,
                pass: r.pass,
            });
        }
    }
    let summary = json!({
        "command": "ortho",
        "matrix": cfg.source.label(),
        "m": m,
        "n": n,
        "nnz": match &a { MatrixHandle::Csr(c) => c.nnz(), MatrixHandle::Dense(d) => d.len() },
        "sketch": cfg.kind.to_string(),
        "sizes": sizes,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "epsilon": cfg.epsilon,
        "checks": reps.len(),
        "violations": violations,
    });
    if cfg.raw {
        Report::new(&raw_rows, summary, reps.len(), violations)
    } else {
        Report::new(&rows, summary, reps.len(), violations)
    }
}

#[derive(Debug, Serialize)]
struct NearestRow {
    s: usize,
    #[serde(rename = "dist_A_P_2")]
    dist_a_p: f64,
    #[serde(rename = "dist_P_T_2")]
    dist_p_t: f64,
    #[serde(rename = "time_P_s")]
    time_p: f64,
    sandwich_pass: bool,
    violations: usize,
}

#[derive(Debug, Serialize)]
struct NearestRawRow {
    s: usize,
    rep: usize,
    seed: u64,
    #[serde(rename = "dist_A_P_2")]
    dist_a_p: f64,
    #[serde(rename = "dist_P_T_2")]
    dist_p_t: f64,
    #[serde(rename = "dist_T_QT_S2")]
    dist_t_qt: f64,
    epsilon: f64,
    epsilon_narrow: Option<f64>,
    #[serde(rename = "time_P_s")]
    time_p: f64,
    sandwich_pass: bool,
    sketch_polar_pass: bool,
    narrow_violation: bool,
}

/// Distance of the nearest sketch-orthogonal matrix `P` from `A` and from
/// the nearest orthogonal matrix `T`, with the two-sided bound on
/// `‖A - P‖_2` evaluated per repetition.
///
/// `T` is computed once. The distortion of the bound is the configured
/// `ε`, or when none is configured, the distortion measured over the ranges
/// the bound involves.
pub fn cmd_nearest(cfg: &ExperimentConfig) -> Result<Report> {
    let (a, sizes) = load(cfg)?;
    let (m, n) = (a.nrows(), a.ncols());
    let dense = a.to_dense();
    let (t, time_t) = timed(cfg.record_times, || nearest_orthogonal(&a))?;
    let dist_a_t = spectral_norm(&(&dense - &t.p))?;
    info!("‖A-T‖_2 = {dist_a_t:.6}, T in {time_t:.3} s");
    let choice = cfg.epsilon.map_or(EpsilonChoice::Empirical, EpsilonChoice::Asserted);

    let all = jobs(cfg, &sizes);
    let reps: Vec<NearestRawRow> = all
        .par_iter()
        .map(|job| {
            let op = SketchOperator::new(cfg.kind, job.s, m, job.seed)?;
            let (p, time_p) = timed(cfg.record_times, || nearest_sts_orthogonal(&a, &op, cfg.rtol))?;
            let rep = sandwich_report(&dense, &p.p, &t.p, &op, choice)?;
            Ok(NearestRawRow {
                s: job.s,
                rep: job.rep,
                seed: job.seed,
                dist_a_p: rep.dist_a_p,
                dist_p_t: rep.dist_p_t,
                dist_t_qt: rep.dist_t_qt,
                epsilon: rep.epsilon,
                epsilon_narrow: rep.epsilon_narrow,
                time_p,
                sandwich_pass: rep.pass(),
                sketch_polar_pass: rep.sketch_polar.pass,
                narrow_violation: rep.narrow_violation,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut violations = 0;
    for (j, &s) in sizes.iter().enumerate() {
        let group: Vec<&NearestRawRow> = all
            .iter()
            .zip(&reps)
            .filter(|(job, _)| job.size_index == j)
            .map(|(_, r)| r)
            .collect();
        let failed = group.iter().filter(|r| !r.sandwich_pass).count();
        violations += failed;
        rows.push(NearestRow {
            s,
            dist_a_p: mean(group.iter().map(|r| r.dist_a_p)).unwrap_or(0.0),
            dist_p_t: mean(group.iter().map(|r| r.dist_p_t)).unwrap_or(0.0),
            time_p: mean(group.iter().map(|r| r.time_p)).unwrap_or(0.0),
            sandwich_pass: failed == 0,
            violations: failed,
        });
    }
    let summary = json!({
        "command": "nearest",
        "matrix": cfg.source.label(),
        "m": m,
        "n": n,
        "sketch": cfg.kind.to_string(),
        "sizes": sizes,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "epsilon": cfg.epsilon,
        "dist_A_T_2": dist_a_t,
        "orthonormality_defect_T": orthonormality_defect(&t.p)?,
        "time_T_s": time_t,
        "sketch_polar_failures": reps.iter().filter(|r| !r.sketch_polar_pass).count(),
        "narrow_range_violations": reps.iter().filter(|r| r.narrow_violation).count(),
        "checks": reps.len(),
        "violations": violations,
    });
    if cfg.raw {
        Report::new(&reps, summary, reps.len(), violations)
    } else {
        Report::new(&rows, summary, reps.len(), violations)
    }
}

/// Writes a generated matrix in Matrix Market format.
pub fn cmd_gen(source: &MatrixSource, out: &Path) -> Result<()> {
    let a = source.load()?;
    write_matrix_market(out, &a)?;
    info!("wrote {} ({}x{}) to {}", source.label(), a.nrows(), a.ncols(), out.display());
    Ok(())
}
