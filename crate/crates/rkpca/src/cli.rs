//! Command-line interface.
//!
//! Exit codes: 0 success, 1 error, 2 solver stopped at its iteration cap
//! (results are still written), 3 gradient check failed.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rkpca_core::baselines::{pca_denoise, solve_rpca};
use rkpca_core::cluster::{cluster_pipeline, normalize_columns, ClusterParams, Recovery};
use rkpca_core::solvers::{lambda_heuristic, solve_admm_btls, solve_plm_adss, DecompositionResult};
use rkpca_core::DataMatrix;

use crate::bench::{protocol_solver, run_table, BenchConfig, Method, Table};
use crate::config::{pick, ConfigFile, Settings, SolverArgs};
use crate::error::{CliError, CliResult};
use crate::gradcheck::{gradcheck, GradcheckOptions, GRADCHECK_TOLERANCE};
use crate::io::{format_labels, read_labels, read_matrix_csv, write_atomic, write_matrix_csv, SampleLayout};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_GRADCHECK_FAILED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "rkpca", version, about = "Robust kernel PCA: denoising, subspace clustering and benchmarks")]
pub struct Cli {
    /// Log level (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a noisy matrix into clean data X and sparse errors E.
    Denoise(DenoiseArgs),
    /// Cluster samples by subspace membership.
    Cluster(ClusterArgs),
    /// Run the synthetic recovery benchmark.
    Bench(BenchArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input matrix (CSV).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Whether samples are the columns or the rows of the CSV.
    #[arg(long, value_enum, default_value_t = SampleLayout::Cols)]
    pub samples: SampleLayout,
    /// Directory for the output files (created if missing).
    #[arg(long, short, default_value = ".")]
    pub out_dir: PathBuf,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DenoiseMethod {
    RkpcaAdmm,
    RkpcaPlm,
    Rpca,
    Pca,
}

impl DenoiseMethod {
    pub fn name(self) -> &'static str {
        match self {
            DenoiseMethod::RkpcaAdmm => "rkpca-admm",
            DenoiseMethod::RkpcaPlm => "rkpca-plm",
            DenoiseMethod::Rpca => "rpca",
            DenoiseMethod::Pca => "pca",
        }
    }
}

impl std::str::FromStr for DenoiseMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <DenoiseMethod as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Decomposition method [default: rkpca-plm].
    #[arg(long, value_enum)]
    pub method: Option<DenoiseMethod>,
    /// Rank for `--method pca`.
    #[arg(long)]
    pub rank: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecoveryMethod {
    RkpcaPlm,
    RkpcaAdmm,
    Rpca,
    /// Build the affinity from the input directly.
    None,
}

impl std::str::FromStr for RecoveryMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <RecoveryMethod as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub io: InputArgs,
    /// Number of clusters C (at least 2).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Number r of kernel eigenvectors used for the affinity.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Affinity exponent p (even, at least 2).
    #[arg(long)]
    pub power: Option<u32>,
    /// How clean data are recovered before clustering [default: rkpca-plm].
    #[arg(long, value_enum)]
    pub recovery: Option<RecoveryMethod>,
    /// Ground-truth labels (one integer per sample) for the matched error.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write affinity.csv.
    #[arg(long)]
    pub affinity: bool,
    /// Scale every sample to unit ℓ₂ norm first.
    #[arg(long)]
    pub normalize: bool,
    /// Seed for the k-means restarts.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub table: Table,
    /// Comma-separated noise densities in [0, 1] [default: the table's rows].
    #[arg(long)]
    pub densities: Option<String>,
    /// Trials per density.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated methods, or `all`.
    #[arg(long)]
    pub methods: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write the aggregate CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write per-trial JSON lines here.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub schatten_p: f64,
    /// Corrupt the analytic gradient (negative control).
    #[arg(long)]
    pub sabotage: bool,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let outcome = match cli.command {
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Cluster(a) => cmd_cluster(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[derive(Debug, Serialize)]
struct DenoiseSummary<'a> {
    method: &'a str,
    rows: usize,
    cols: usize,
    converged: bool,
    iterations: usize,
    lambda: Option<f64>,
    sigma: Option<f64>,
    final_objective: Option<f64>,
    residual: f64,
    rank: Option<usize>,
    final_omega: Option<f64>,
    objective_trace: Vec<f64>,
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn cmd_denoise(a: &DenoiseArgs) -> CliResult<u8> {
    let file = ConfigFile::load_optional(a.io.config.as_deref())?;
    let method = pick(a.method, &file, "method")?.unwrap_or(DenoiseMethod::RkpcaPlm);
    let rank = pick(a.rank, &file, "rank")?;
    let settings = a.solver.resolve(&file, &Settings::default())?;
    file.finish()?;
    let m = read_matrix_csv(&a.io.input, a.io.samples)?;

    let (x, e, summary) = match method {
        DenoiseMethod::Pca => {
            let r = rank.ok_or_else(|| CliError::config("--method pca needs --rank"))?;
            let x = pca_denoise(&m, r)?;
            let e = &m - &x;
            let residual = 0.0;
            let summary = DenoiseSummary {
                method: method.name(),
                rows: m.rows(),
                cols: m.cols(),
                converged: true,
                iterations: 0,
                lambda: None,
                sigma: None,
                final_objective: None,
                residual,
                rank: Some(r),
                final_omega: None,
                objective_trace: Vec::new(),
            };
            (x, e, summary)
        }
        _ => {
            let r: DecompositionResult = match method {
                DenoiseMethod::RkpcaAdmm => solve_admm_btls(&m, &settings.kernel, &settings.solver)?,
                DenoiseMethod::RkpcaPlm => solve_plm_adss(&m, &settings.kernel, &settings.solver)?,
                _ => solve_rpca(&m, &settings.rpca)?,
            };
            let summary = DenoiseSummary {
                method: method.name(),
                rows: m.rows(),
                cols: m.cols(),
                converged: r.converged,
                iterations: r.iterations,
                lambda: Some(r.lambda),
                sigma: r.sigma,
                final_objective: Some(r.final_objective),
                residual: r.residual,
                rank: None,
                final_omega: r.final_omega,
                objective_trace: r.objective_trace,
            };
            (r.x, r.e, summary)
        }
    };

    ensure_dir(&a.io.out_dir)?;
    write_matrix_csv(&a.io.out_dir.join("X.csv"), &x, a.io.samples)?;
    write_matrix_csv(&a.io.out_dir.join("E.csv"), &e, a.io.samples)?;
    write_json(&a.io.out_dir.join("summary.json"), &summary)?;
    println!(
        "{}: {} after {} iterations (lambda = {})",
        method.name(),
        if summary.converged { "converged" } else { "stopped at the iteration cap" },
        summary.iterations,
        summary.lambda.map_or("n/a".to_string(), |l| format!("{l:.6e}"))
    );
    Ok(if summary.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Debug, Serialize)]
struct ClusterSummary {
    recovery: &'static str,
    clusters: usize,
    rank: usize,
    power: u32,
    seed: u64,
    normalized: bool,
    lambda: Option<f64>,
    zero_rows: usize,
    matched_error: Option<f64>,
}

pub fn cmd_cluster(a: &ClusterArgs) -> CliResult<u8> {
    let file = ConfigFile::load_optional(a.io.config.as_deref())?;
    let required = |v: Option<usize>, what: &str| {
        v.ok_or_else(|| CliError::config(format!("--{what} is required")))
    };
    let clusters = required(pick(a.clusters, &file, "clusters")?, "clusters")?;
    let rank = required(pick(a.rank, &file, "rank")?, "rank")?;
    let power = pick(a.power, &file, "power")?.ok_or_else(|| CliError::config("--power is required"))?;
    let params = ClusterParams { clusters, rank, power };
    params.validate()?;
    let recovery = pick(a.recovery, &file, "recovery")?.unwrap_or(RecoveryMethod::RkpcaPlm);
    let seed = pick(a.seed, &file, "seed")?.unwrap_or(0);
    let settings = a.solver.resolve(&file, &Settings::default())?;
    file.finish()?;

    let mut m = read_matrix_csv(&a.io.input, a.io.samples)?;
    if a.normalize {
        m = normalize_columns(&m);
    }
    let truth = a.truth.as_deref().map(read_labels).transpose()?;
    let (recovery_spec, name, lambda) = match recovery {
        RecoveryMethod::RkpcaPlm => {
            (Recovery::RkpcaPlm, "rkpca-plm", Some(resolved_lambda(&m, &settings)?))
        }
        RecoveryMethod::RkpcaAdmm => {
            (Recovery::RkpcaAdmm, "rkpca-admm", Some(resolved_lambda(&m, &settings)?))
        }
        RecoveryMethod::Rpca => {
            let l = settings.rpca.resolved_lambda(&m);
            (Recovery::Rpca(settings.rpca.clone()), "rpca", Some(l))
        }
        RecoveryMethod::None => (Recovery::Raw, "none", None),
    };
    let result = cluster_pipeline(
        &m,
        &settings.kernel,
        &settings.solver,
        &params,
        &recovery_spec,
        seed,
        truth.as_deref(),
    )?;

    ensure_dir(&a.io.out_dir)?;
    write_atomic(&a.io.out_dir.join("labels.csv"), format_labels(&result.labels).as_bytes())?;
    if a.affinity {
        write_matrix_csv(&a.io.out_dir.join("affinity.csv"), &result.affinity, SampleLayout::Cols)?;
    }
    let summary = ClusterSummary {
        recovery: name,
        clusters,
        rank,
        power,
        seed,
        normalized: a.normalize,
        lambda,
        zero_rows: result.zero_rows,
        matched_error: result.matched_error,
    };
    write_json(&a.io.out_dir.join("summary.json"), &summary)?;
    if let Some(err) = result.matched_error {
        println!("clustering error: {err:.6}");
    }
    Ok(EXIT_OK)
}

fn resolved_lambda(m: &DataMatrix, s: &Settings) -> CliResult<f64> {
    Ok(match s.solver.lambda {
        Some(l) => l,
        None => lambda_heuristic(m, s.solver.lambda0)?,
    })
}

pub fn bench_config(a: &BenchArgs) -> CliResult<BenchConfig> {
    let file = ConfigFile::load_optional(a.config.as_deref())?;
    let mut cfg = BenchConfig::new(a.table);
    if let Some(text) = pick(a.densities.clone(), &file, "densities")? {
        cfg.densities = parse_densities(&text)?;
    }
    if let Some(text) = pick(a.methods.clone(), &file, "methods")? {
        cfg.methods = Method::parse_list(&text).map_err(CliError::Config)?;
    }
    cfg.trials = pick(a.trials, &file, "trials")?.unwrap_or(cfg.trials);
    cfg.seed = pick(a.seed, &file, "seed")?.unwrap_or(cfg.seed);
    cfg.jobs = pick(a.jobs, &file, "jobs")?.unwrap_or(cfg.jobs);
    let defaults = Settings { kernel: cfg.kernel, solver: protocol_solver(), rpca: cfg.rpca.clone() };
    let s = a.solver.resolve(&file, &defaults)?;
    file.finish()?;
    cfg.kernel = s.kernel;
    cfg.solver = s.solver;
    cfg.rpca = s.rpca;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_densities(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v: f64 = s.parse().map_err(|_| CliError::config(format!("bad density {s:?}")))?;
            // Accept percentages such as `30` for 30%.
            Ok(if v > 1.0 { v / 100.0 } else { v })
        })
        .collect()
}

pub fn cmd_bench(a: &BenchArgs) -> CliResult<u8> {
    let cfg = bench_config(a)?;
    let report = run_table(&cfg)?;
    let csv = report.aggregate_csv();
    if let Some(path) = &a.csv {
        write_atomic(path, csv.as_bytes())?;
    }
    if let Some(path) = &a.log {
        write_atomic(path, report.trials_jsonl().as_bytes())?;
    }
    print!("{csv}");
    println!();
    print!("{}", report.human_table());
    Ok(EXIT_OK)
}

pub fn cmd_gradcheck(a: &GradcheckArgs) -> CliResult<u8> {
    let opts = GradcheckOptions {
        d: a.d,
        n: a.n,
        seed: a.seed,
        beta: a.beta,
        schatten_p: a.schatten_p,
        sabotage: a.sabotage,
    };
    let report = gradcheck(&opts)?;
    println!("grad_x relative error: {:.3e}", report.err_x);
    println!("grad_e relative error: {:.3e}", report.err_e);
    println!("max relative error: {:.3e} (tolerance {GRADCHECK_TOLERANCE:e})", report.max_error());
    Ok(if report.passed() { EXIT_OK } else { EXIT_GRADCHECK_FAILED })
}
