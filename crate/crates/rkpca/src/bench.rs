//! Seeded recovery benchmarks on synthetic nonlinear data.
//!
//! Every `(density, trial)` cell draws its own clean matrix and noise from
//! seeds derived with [`split_seed`], so a trial can be rerun in isolation
//! and results do not depend on how trials are spread over worker threads.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use rkpca_core::baselines::{pca_best_rank, solve_rpca, RpcaConfig};
use rkpca_core::kernel::KernelSpec;
use rkpca_core::solvers::{solve_admm_btls, solve_plm_adss, DecompositionResult, SolverConfig};
use rkpca_core::synth::{
    gen_synthetic, inject_noise, knn_error, relative_error, split_seed, NoiseSpec, SynthSpec,
};
use rkpca_core::DataMatrix;

use crate::error::{CliError, CliResult};

/// λ₀ used by the benchmark protocol.
pub const BENCH_LAMBDA0: f64 = 0.4;
/// Iteration cap used by the benchmark protocol.
pub const BENCH_T_MAX: usize = 1000;
pub const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Noisy,
    Pca,
    Rpca,
    RkpcaAdmm,
    RkpcaPlm,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Noisy, Method::Pca, Method::Rpca, Method::RkpcaAdmm, Method::RkpcaPlm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Noisy => "noisy",
            Method::Pca => "pca",
            Method::Rpca => "rpca",
            Method::RkpcaAdmm => "rkpca-admm",
            Method::RkpcaPlm => "rkpca-plm",
        }
    }

    pub fn valid_names() -> String {
        Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
    }

    /// Parses a comma-separated list; `all` selects every method.
    pub fn parse_list(text: &str) -> Result<Vec<Method>, String> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item.eq_ignore_ascii_case("all") {
                out.extend(Method::ALL);
            } else {
                out.push(item.parse()?);
            }
        }
        if out.is_empty() {
            return Err(format!("no methods given; valid names: {}", Method::valid_names()));
        }
        let mut seen = Vec::new();
        out.retain(|m| {
            let fresh = !seen.contains(m);
            seen.push(*m);
            fresh
        });
        Ok(out)
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase();
        let lower = if lower == "rkpca" { "rkpca-plm".to_string() } else { lower };
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| format!("unknown method {s:?}; valid names: {}", Method::valid_names()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Table {
    /// One 20×100 nonlinear block.
    T1,
    /// Five stacked 20×50 blocks (20×250).
    T2,
}

impl Table {
    pub fn name(self) -> &'static str {
        match self {
            Table::T1 => "t1",
            Table::T2 => "t2",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Table::T1 => "Relative errors (%) on single-subspace data",
            Table::T2 => "Relative errors (%) on multiple-subspace data",
        }
    }

    pub fn synth(self, seed: u64) -> SynthSpec {
        match self {
            Table::T1 => SynthSpec::single(seed),
            Table::T2 => SynthSpec::multi(seed),
        }
    }

    pub fn default_densities(self) -> Vec<f64> {
        match self {
            Table::T1 => vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
            Table::T2 => vec![0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub table: Table,
    pub densities: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Worker threads; results are identical for any value.
    pub jobs: usize,
    pub kernel: KernelSpec,
    pub solver: SolverConfig,
    pub rpca: RpcaConfig,
}

impl BenchConfig {
    /// The benchmark protocol defaults for `table`.
    pub fn new(table: Table) -> Self {
        BenchConfig {
            table,
            densities: table.default_densities(),
            trials: DEFAULT_TRIALS,
            methods: Method::ALL.to_vec(),
            seed: 0,
            jobs: 1,
            kernel: KernelSpec::rbf(1.0),
            solver: protocol_solver(),
            rpca: RpcaConfig::default(),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.densities.is_empty() || self.densities.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return Err(CliError::config("densities must be a non-empty list of values in [0, 1]"));
        }
        if self.trials == 0 || self.jobs == 0 || self.methods.is_empty() {
            return Err(CliError::config("trials, jobs and the method list must be non-empty"));
        }
        self.kernel.validate()?;
        self.solver.validate()?;
        self.rpca.validate()?;
        Ok(())
    }
}

/// Solver settings of the benchmark protocol.
pub fn protocol_solver() -> SolverConfig {
    SolverConfig { lambda0: BENCH_LAMBDA0, t_max: BENCH_T_MAX, ..SolverConfig::default() }
}

/// One method on one corrupted matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub table: &'static str,
    pub method: Method,
    pub noise_density: f64,
    pub trial: usize,
    pub seed: u64,
    pub e_rlt: Option<f64>,
    /// Leave-one-out 5-NN error of the estimate against the subspace labels
    /// (multi-subspace table only).
    pub e_knn: Option<f64>,
    pub elapsed_ms: f64,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub trace_len: Option<usize>,
    pub pca_rank: Option<usize>,
    pub error: Option<String>,
}

/// Mean error of one method at one density.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub density: f64,
    pub method: Method,
    /// `None` when every trial failed.
    pub mean_e_rlt: Option<f64>,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub table: Table,
    pub trials: Vec<TrialReport>,
    pub cells: Vec<CellSummary>,
}

pub const AGGREGATE_HEADER: &str = "table,density,method,mean_e_rlt,trials,failures";

/// Seed of trial `trial` at density index `density_index`.
pub fn trial_seed(master: u64, density_index: usize, trial: usize) -> u64 {
    split_seed(split_seed(master, density_index as u64), trial as u64)
}

/// Neighbours used for the k-NN error of recovered multi-subspace data.
pub const KNN_K: usize = 5;

/// One generated benchmark problem.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub clean: DataMatrix,
    pub corrupted: DataMatrix,
    /// Subspace of every column.
    pub labels: Vec<usize>,
    pub seed: u64,
}

/// The clean matrix and its corrupted version for one `(density, trial)` cell.
pub fn trial_instance(
    table: Table,
    master: u64,
    density_index: usize,
    density: f64,
    trial: usize,
) -> CliResult<TrialInstance> {
    let seed = trial_seed(master, density_index, trial);
    let (clean, labels) = gen_synthetic(&table.synth(split_seed(seed, 0)))?;
    let (corrupted, _) = inject_noise(&clean, &NoiseSpec::sparse_gaussian(density), split_seed(seed, 1))?;
    Ok(TrialInstance { clean, corrupted, labels, seed })
}

pub fn run_table(cfg: &BenchConfig) -> CliResult<BenchReport> {
    cfg.validate()?;
    let work: Vec<(usize, usize)> =
        (0..cfg.densities.len()).flat_map(|d| (0..cfg.trials).map(move |t| (d, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {} worker threads: {e}", cfg.jobs)))?;
    let per_item: Vec<CliResult<Vec<TrialReport>>> =
        pool.install(|| work.par_iter().map(|&(d, t)| run_trial(cfg, d, t)).collect());
    let mut trials = Vec::with_capacity(work.len() * cfg.methods.len());
    for item in per_item {
        trials.extend(item?);
    }

    let mut cells = Vec::new();
    for &density in &cfg.densities {
        for &method in &cfg.methods {
            let reports: Vec<&TrialReport> =
                trials.iter().filter(|r| r.noise_density == density && r.method == method).collect();
            let ok: Vec<f64> = reports.iter().filter_map(|r| r.e_rlt).collect();
            let mean = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
            cells.push(CellSummary {
                density,
                method,
                mean_e_rlt: mean,
                trials: reports.len(),
                failures: reports.len() - ok.len(),
            });
        }
    }
    Ok(BenchReport { table: cfg.table, trials, cells })
}

fn run_trial(cfg: &BenchConfig, density_index: usize, trial: usize) -> CliResult<Vec<TrialReport>> {
    let density = cfg.densities[density_index];
    let inst = trial_instance(cfg.table, cfg.seed, density_index, density, trial)?;
    let (x, m, seed) = (&inst.clean, &inst.corrupted, inst.seed);
    let labelled = cfg.table == Table::T2;
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let mut report = TrialReport {
            table: cfg.table.name(),
            method,
            noise_density: density,
            trial,
            seed,
            e_rlt: None,
            e_knn: None,
            elapsed_ms: 0.0,
            iterations: None,
            converged: None,
            trace_len: None,
            pca_rank: None,
            error: None,
        };
        let estimate = run_method(cfg, method, x, m, &mut report);
        report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        let outcome = estimate.and_then(|estimate| {
            let e_rlt = relative_error(x, &estimate)?;
            let e_knn = if labelled { Some(knn_error(&estimate, &inst.labels, KNN_K)?) } else { None };
            Ok((e_rlt, e_knn))
        });
        match outcome {
            Ok((e_rlt, e_knn)) => {
                report.e_rlt = Some(e_rlt);
                report.e_knn = e_knn;
            }
            Err(e) => {
                log::warn!("{} trial {trial} at density {density}: {e}", method.name());
                report.error = Some(e.to_string());
            }
        }
        out.push(report);
    }
    Ok(out)
}

fn run_method(
    cfg: &BenchConfig,
    method: Method,
    x: &DataMatrix,
    m: &DataMatrix,
    report: &mut TrialReport,
) -> rkpca_core::Result<DataMatrix> {
    let record = |report: &mut TrialReport, r: &DecompositionResult| {
        report.iterations = Some(r.iterations);
        report.converged = Some(r.converged);
        report.trace_len = Some(r.objective_trace.len());
    };
    let estimate = match method {
        Method::Noisy => m.clone(),
        Method::Pca => {
            let (rank, approx) = pca_best_rank(m, x)?;
            report.pca_rank = Some(rank);
            approx
        }
        Method::Rpca => {
            let r = solve_rpca(m, &cfg.rpca)?;
            record(report, &r);
            r.x
        }
        Method::RkpcaAdmm => {
            let r = solve_admm_btls(m, &cfg.kernel, &cfg.solver)?;
            record(report, &r);
            r.x
        }
        Method::RkpcaPlm => {
            let r = solve_plm_adss(m, &cfg.kernel, &cfg.solver)?;
            record(report, &r);
            r.x
        }
    };
    Ok(estimate)
}

impl BenchReport {
    pub fn cell(&self, density: f64, method: Method) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.density == density && c.method == method)
    }

    /// Aggregate CSV; identical bytes for identical configurations.
    pub fn aggregate_csv(&self) -> String {
        let mut out = String::from(AGGREGATE_HEADER);
        out.push('\n');
        for c in &self.cells {
            let mean = c.mean_e_rlt.map(|v| format!("{v:.10}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.table.name(),
                c.density,
                c.method.name(),
                mean,
                c.trials,
                c.failures
            );
        }
        out
    }

    /// One JSON object per method and trial.
    pub fn trials_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.trials {
            out.push_str(&serde_json::to_string(t).expect("trial reports serialize"));
            out.push('\n');
        }
        out
    }

    /// Percentages laid out with one row per density and one column per method.
    pub fn human_table(&self) -> String {
        let mut methods: Vec<Method> = Vec::new();
        let mut densities: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !methods.contains(&c.method) {
                methods.push(c.method);
            }
            if !densities.contains(&c.density) {
                densities.push(c.density);
            }
        }
        let trials = self.cells.first().map_or(0, |c| c.trials);
        let mut out = format!("{} ({}, {trials} trials)\n", self.table.title(), self.table.name());
        let _ = write!(out, "{:>8}", "delta");
        for m in &methods {
            let _ = write!(out, "{:>12}", m.name());
        }
        out.push('\n');
        let mut failed = false;
        for &d in &densities {
            let _ = write!(out, "{:>7}%", format!("{:.0}", d * 100.0));
            for &m in &methods {
                let cell = self.cell(d, m).expect("cell for every pair");
                let text = match cell.mean_e_rlt {
                    Some(v) => format!("{:.2}", v * 100.0),
                    None => "-".into(),
                };
                let mark = if cell.failures > 0 { "*" } else { "" };
                failed |= cell.failures > 0;
                let _ = write!(out, "{:>12}", format!("{text}{mark}"));
            }
            out.push('\n');
        }
        if failed {
            out.push_str("* some trials failed and are excluded from the mean\n");
        }
        out
    }
}
