use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use stsvd::SketchKind;
use stsvd_cli::{cmd_gen, cmd_nearest, cmd_ortho, cmd_spectrum, exit, exit_code, Command, ExperimentConfig, MatrixSource, SketchSize};

#[derive(Parser)]
#[command(name = "stsvd", version, about = "Sketch-orthogonal SVD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Leading S^T S-singular values against the full and a randomized SVD.
    Spectrum(RunArgs),
    /// Loss of orthogonality of the S^T S-orthonormal factor.
    Ortho(RunArgs),
    /// Nearest S^T S-orthogonal matrix against the nearest orthogonal one.
    Nearest(RunArgs),
    /// Write a generated matrix in Matrix Market format.
    Gen(GenArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// Matrix Market input file.
    #[arg(long, value_name = "PATH", group = "source")]
    matrix: Option<PathBuf>,
    /// Cauchy matrix of order N.
    #[arg(long, value_name = "N", group = "source")]
    cauchy: Option<usize>,
    /// Sparse matrix with a condition target: M,N,DENSITY,KAPPA.
    #[arg(long, value_name = "M,N,DENSITY,KAPPA", group = "source")]
    sparse: Option<String>,
    /// Dense Gaussian matrix: M,N.
    #[arg(long, value_name = "M,N", group = "source")]
    random: Option<String>,
    /// Seed of generated matrices.
    #[arg(long, default_value_t = 1)]
    matrix_seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Sketch family.
    #[arg(long)]
    sketch: Option<SketchKind>,
    /// Sketch sizes, comma separated: 60, 4n (times n) or 55log (times ln n).
    #[arg(long, value_delimiter = ',')]
    s: Vec<SketchSize>,
    /// Distortion for the bound checks (and for sizing with --delta).
    #[arg(long)]
    eps: Option<f64>,
    /// Failure probability; with --eps and no --s, sizes the sketch.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    /// Output CSV; a .jsonl mirror and a .summary.json are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One row per repetition instead of averages.
    #[arg(long)]
    raw: bool,
    /// Full-scale presets.
    #[arg(long)]
    xl: bool,
    /// Exit with code 4 when violations exceed --max-violations.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 0)]
    max_violations: usize,
    /// Write 0 in timing columns so output is byte-identical across runs.
    #[arg(long)]
    no_times: bool,
    /// Relative cutoff on θ for the retained rank.
    #[arg(long)]
    rtol: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    out: PathBuf,
}

fn parse_list<const K: usize>(text: &str, what: &str) -> Result<[f64; K], String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("--{what}: expected {K} comma-separated numbers"))?;
    parts
        .try_into()
        .map_err(|_| format!("--{what}: expected {K} comma-separated numbers"))
}

fn as_dim(v: f64, what: &str) -> Result<usize, String> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(format!("--{what}: dimensions must be positive integers"))
    }
}

impl SourceArgs {
    fn resolve(&self) -> Result<Option<MatrixSource>, String> {
        if let Some(p) = &self.matrix {
            return Ok(Some(MatrixSource::File(p.clone())));
        }
        if let Some(n) = self.cauchy {
            return Ok(Some(MatrixSource::Cauchy { n }));
        }
        if let Some(text) = &self.sparse {
            let [m, n, density, kappa] = parse_list::<4>(text, "sparse")?;
            return Ok(Some(MatrixSource::Sparse {
                m: as_dim(m, "sparse")?,
                n: as_dim(n, "sparse")?,
                density,
                kappa,
                seed: self.matrix_seed,
            }));
        }
        if let Some(text) = &self.random {
            let [m, n] = parse_list::<2>(text, "random")?;
            return Ok(Some(MatrixSource::Random {
                m: as_dim(m, "random")?,
                n: as_dim(n, "random")?,
                seed: self.matrix_seed,
            }));
        }
        Ok(None)
    }
}

fn config(command: Command, args: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::preset(command, args.xl);
    if let Some(source) = args.source.resolve()? {
        cfg.source = source;
    }
    if let Some(kind) = args.sketch {
        cfg.kind = kind;
    }
    if !args.s.is_empty() {
        cfg.sizes = args.s.clone();
    } else if args.delta.is_some() {
        cfg.sizes.clear();
    }
    if args.eps.is_some() {
        cfg.epsilon = args.eps;
    }
    cfg.delta = args.delta;
    cfg.seed = args.seed;
    cfg.reps = args.reps;
    cfg.raw = args.raw;
    cfg.record_times = !args.no_times;
    cfg.rtol = args.rtol;
    Ok(cfg)
}

fn run(cli: Cli) -> i32 {
    let (command, args) = match cli.command {
        Cmd::Gen(g) => {
            let source = match g.source.resolve() {
                Ok(Some(s)) => s,
                Ok(None) => {
                    error!("gen needs one of --cauchy, --sparse, --random or --matrix");
                    return exit::INPUT_ERROR;
                }
                Err(e) => {
                    error!("{e}");
                    return exit::INPUT_ERROR;
                }
            };
            return match cmd_gen(&source, &g.out) {
                Ok(()) => exit::SUCCESS,
                Err(e) => {
                    error!("{e}");
                    exit_code(&e)
                }
            };
        }
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Ortho(a) => (Command::Ortho, a),
        Cmd::Nearest(a) => (Command::Nearest, a),
    };
    let cfg = match config(command, &args) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return exit::INPUT_ERROR;
        }
    };
    let result = match command {
        Command::Spectrum => cmd_spectrum(&cfg),
        Command::Ortho => cmd_ortho(&cfg),
        Command::Nearest => cmd_nearest(&cfg),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            error!("{e}");
            return exit_code(&e);
        }
    };
    let written = match &args.out {
        Some(path) => report.write_to(path),
        None => std::io::stdout()
            .write_all(&report.csv)
            .map_err(stsvd::Error::from)
            .and_then(|()| {
                let text = serde_json::to_string(&report.summary).map_err(|e| stsvd::Error::Io(e.into()))?;
                eprintln!("{text}");
                Ok(())
            }),
    };
    if let Err(e) = written {
        error!("{e}");
        return exit_code(&e);
    }
    if report.violations > 0 {
        eprintln!("{} of {} bound checks failed", report.violations, report.checks);
    }
    if args.strict && report.violations > args.max_violations {
        return exit::BOUND_VIOLATIONS;
    }
    exit::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = run(Cli::parse());
    ExitCode::from(code as u8)
}
