//! Experiment configuration and the built-in presets.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use stsvd::matgen::{gen_cauchy, gen_gaussian, gen_sparse_conditioned, CauchySpec};
use stsvd::mmio::read_matrix_market;
use stsvd::sketch::{sketch_dim, EmbeddingSpec};
use stsvd::{Error, MatrixHandle, Result, SketchKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Ortho,
    Nearest,
}

/// Where the test matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixSource {
    Cauchy { n: usize },
    Sparse { m: usize, n: usize, density: f64, kappa: f64, seed: u64 },
    /// Dense standard Gaussian entries.
    Random { m: usize, n: usize, seed: u64 },
    File(PathBuf),
}

impl MatrixSource {
    pub fn load(&self) -> Result<MatrixHandle> {
        match self {
            MatrixSource::Cauchy { n } => gen_cauchy(CauchySpec::new(*n)),
            MatrixSource::Sparse { m, n, density, kappa, seed } => {
                gen_sparse_conditioned(*m, *n, *density, *kappa, *seed)
            }
            MatrixSource::Random { m, n, seed } => Ok(gen_gaussian(*m, *n, *seed).into()),
            MatrixSource::File(path) => read_matrix_market(path),
        }
    }

    /// Short label for logs and summaries.
    pub fn label(&self) -> String {
        match self {
            MatrixSource::Cauchy { n } => format!("cauchy-{n}"),
            MatrixSource::Sparse { m, n, density, kappa, .. } => format!("sparse-{m}x{n}-d{density}-k{kappa:e}"),
            MatrixSource::Random { m, n, .. } => format!("random-{m}x{n}"),
            MatrixSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
        }
    }
}

/// One entry of a sketch-size list: an absolute size, a multiple of `n`, or
/// a multiple of `ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchSize {
    Fixed(usize),
    TimesN(f64),
    TimesLnN(f64),
}

impl SketchSize {
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            SketchSize::Fixed(s) => s,
            SketchSize::TimesN(c) => (c * n as f64).round() as usize,
            SketchSize::TimesLnN(c) => (c * (n as f64).ln()).ceil() as usize,
        }
    }
}

impl FromStr for SketchSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || format!("invalid sketch size '{t}' (expected e.g. 60, 4n or 55log)");
        let coef = |c: &str| -> std::result::Result<f64, String> {
            if c.is_empty() {
                return Ok(1.0);
            }
            let v: f64 = c.parse().map_err(|_| bad())?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        if let Some(c) = t.strip_suffix("log") {
            Ok(SketchSize::TimesLnN(coef(c)?))
        } else if let Some(c) = t.strip_suffix('n') {
            Ok(SketchSize::TimesN(coef(c)?))
        } else {
            match t.parse::<usize>() {
                Ok(0) | Err(_) => Err(bad()),
                Ok(v) => Ok(SketchSize::Fixed(v)),
            }
        }
    }
}

impl fmt::Display for SketchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SketchSize::Fixed(s) => write!(f, "{s}"),
            SketchSize::TimesN(c) => write!(f, "{c}n"),
            SketchSize::TimesLnN(c) => write!(f, "{c}log"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub source: MatrixSource,
    pub kind: SketchKind,
    /// Explicit sketch sizes; when empty, `s` comes from `(epsilon, delta)`.
    pub sizes: Vec<SketchSize>,
    /// Distortion used by the bound checks. `None` means measured per run.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    pub reps: usize,
    pub raw: bool,
    pub record_times: bool,
    /// Rank cutoff passed to the `S^T S`-SVD.
    pub rtol: Option<f64>,
}

impl ExperimentConfig {
    pub fn preset(command: Command, xl: bool) -> Self {
        let (source, kind, sizes, epsilon) = match (command, xl) {
            (Command::Spectrum, false) => (
                MatrixSource::Cauchy { n: 200 },
                SketchKind::Srtt,
                vec![SketchSize::Fixed(30), SketchSize::Fixed(60)],
                None,
            ),
            (Command::Spectrum, true) => (
                MatrixSource::Cauchy { n: 5000 },
                SketchKind::Srtt,
                vec![SketchSize::Fixed(30), SketchSize::Fixed(60)],
                None,
            ),
            (Command::Ortho, false) => (
                MatrixSource::Sparse {
                    m: 20000,
                    n: 100,
                    density: 0.003,
                    kappa: 1e10,
                    seed: 1,
                },
                SketchKind::Gaussian,
                vec![SketchSize::TimesN(16.0), SketchSize::TimesN(18.0), SketchSize::TimesN(20.0)],
                Some(0.5),
            ),
            (Command::Ortho, true) => (
                MatrixSource::Sparse {
                    m: 300_000,
                    n: 300,
                    density: 0.003,
                    kappa: 1e10,
                    seed: 1,
                },
                SketchKind::Gaussian,
                vec![
                    SketchSize::TimesLnN(55.0),
                    SketchSize::TimesLnN(60.0),
                    SketchSize::TimesLnN(65.0),
                ],
                Some(0.5),
            ),
            (Command::Nearest, xl) => (
                MatrixSource::Random { m: 300, n: 20, seed: 1 },
                SketchKind::Srtt,
                (1..=6).map(|k| SketchSize::TimesN(2.0 * k as f64)).collect(),
                if xl { Some(0.5) } else { None },
            ),
        };
        Self {
            command,
            source,
            kind,
            sizes,
            epsilon,
            delta: None,
            seed: 0,
            reps: 50,
            raw: false,
            record_times: true,
            rtol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Precondition("repetitions must be at least 1".into()));
        }
        if self.sizes.is_empty() && self.delta.is_none() {
            return Err(Error::Precondition("give sketch sizes or both --eps and --delta".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Precondition(format!("epsilon must be positive, got {e}")));
            }
        }
        Ok(())
    }

    /// Concrete sketch sizes for a matrix with `m` rows and `n` columns.
    pub fn resolve_sizes(&self, m: usize, n: usize) -> Result<Vec<usize>> {
        let sizes: Vec<usize> = if self.sizes.is_empty() {
            let eps = self.epsilon.unwrap_or(0.5);
            let delta = self.delta.unwrap_or(1e-6);
            let spec = EmbeddingSpec::new(eps, delta, n.max(1), m, self.kind)?;
            vec![sketch_dim(&spec)]
        } else {
            self.sizes.iter().map(|s| s.resolve(n)).collect()
        };
        for &s in &sizes {
            if s == 0 || s > m {
                return Err(Error::InvalidDimension(format!("sketch size {s} outside 1..={m}")));
            }
        }
        Ok(sizes)
    }
}
