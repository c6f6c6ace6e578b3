//! Flat `key = value` configuration files and the solver flags they back.
//!
//! A configuration file holds one `key = value` pair per line. Blank lines
//! and lines starting with `#` are ignored. Keys are the long flag names
//! without the leading dashes (`lambda0`, `t-max`, `beta`, ...). A value
//! given on the command line wins over the file, which wins over the
//! built-in default. Unknown keys are rejected.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rkpca_core::baselines::RpcaConfig;
use rkpca_core::kernel::KernelSpec;
use rkpca_core::solvers::SolverConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct ConfigFile {
    source: Option<PathBuf>,
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile::default()
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("config line {}: expected `key = value`, got {line:?}", index + 1))
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::config(format!("config line {}: empty key", index + 1)));
            }
            if let Some((first, _)) = entries.insert(key.clone(), (index + 1, value.trim().to_string())) {
                return Err(CliError::config(format!(
                    "config line {}: key {key:?} already set on line {first}",
                    index + 1
                )));
            }
        }
        Ok(ConfigFile { source: None, entries, used: RefCell::default() })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut file = ConfigFile::parse(&text)?;
        file.source = Some(path.to_path_buf());
        Ok(file)
    }

    pub fn load_optional(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(ConfigFile::empty()), ConfigFile::load)
    }

    /// The parsed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|e| {
                CliError::config(format!("{}line {line}: bad value {raw:?} for {key}: {e}", self.prefix()))
            }),
        }
    }

    /// Errors if the file contains keys nobody asked for.
    pub fn finish(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> =
            self.entries.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(format!("{}unknown key(s): {}", self.prefix(), unknown.join(", "))))
        }
    }

    fn prefix(&self) -> String {
        self.source.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default()
    }
}

/// Flag value if given, else the file's value, else `None`.
pub fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    let from_file = file.get(key)?;
    Ok(flag.or(from_file))
}

/// Kernel and solver settings shared by `denoise`, `cluster` and `bench`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SolverArgs {
    /// λ = n·λ₀/‖M‖₁ scale factor.
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Fixed λ, overriding the λ₀ heuristic.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// RBF bandwidth factor β (σ = β × mean pairwise distance).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fixed RBF bandwidth σ, overriding β.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Schatten exponent p in (0, 1].
    #[arg(long)]
    pub schatten_p: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Convergence tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    /// ADMM penalty μ as a multiple of λ.
    #[arg(long)]
    pub mu_factor: Option<f64>,
    /// ADMM initial step η₀ as a multiple of 1/L.
    #[arg(long)]
    pub eta0_factor: Option<f64>,
    /// PLM initial step multiplier ω.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// PLM growth factor for ω.
    #[arg(long)]
    pub omega_c: Option<f64>,
    /// RPCA λ (default 1/√max(d, n)).
    #[arg(long)]
    pub rpca_lambda: Option<f64>,
    /// RPCA iteration cap.
    #[arg(long)]
    pub rpca_t_max: Option<usize>,
}

/// Fully resolved kernel and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub kernel: KernelSpec,
    pub solver: SolverConfig,
    pub rpca: RpcaConfig,
}

impl SolverArgs {
    /// Merges flags, file and the given defaults.
    pub fn resolve(&self, file: &ConfigFile, defaults: &Settings) -> CliResult<Settings> {
        let mut s = defaults.clone();
        if let Some(v) = pick(self.lambda0, file, "lambda0")? {
            s.solver.lambda0 = v;
        }
        if let Some(v) = pick(self.lambda, file, "lambda")? {
            s.solver.lambda = Some(v);
        }
        if let Some(v) = pick(self.beta, file, "beta")? {
            s.kernel.beta = v;
        }
        if let Some(v) = pick(self.sigma, file, "sigma")? {
            s.kernel.sigma = Some(v);
        }
        if let Some(v) = pick(self.schatten_p, file, "schatten-p")? {
            s.kernel.schatten_p = v;
        }
        if let Some(v) = pick(self.t_max, file, "t-max")? {
            s.solver.t_max = v;
        }
        if let Some(v) = pick(self.eps, file, "eps")? {
            s.solver.eps = Some(v);
        }
        if let Some(v) = pick(self.mu_factor, file, "mu-factor")? {
            s.solver.mu_factor = v;
        }
        if let Some(v) = pick(self.eta0_factor, file, "eta0-factor")? {
            s.solver.eta0_factor = v;
        }
        if let Some(v) = pick(self.omega0, file, "omega0")? {
            s.solver.omega0 = v;
        }
        if let Some(v) = pick(self.omega_c, file, "omega-c")? {
            s.solver.omega_c = v;
        }
        if let Some(v) = pick(self.rpca_lambda, file, "rpca-lambda")? {
            s.rpca.lambda = Some(v);
        }
        if let Some(v) = pick(self.rpca_t_max, file, "rpca-t-max")? {
            s.rpca.t_max = v;
        }
        s.kernel.validate()?;
        s.solver.validate()?;
        s.rpca.validate()?;
        Ok(s)
    }
}

impl Default for Settings {
    fn default() -> Self {
        Settings { kernel: KernelSpec::rbf(1.0), solver: SolverConfig::default(), rpca: RpcaConfig::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let file = ConfigFile::parse("# comment\nlambda0 = 0.7\n\nbeta=2\n").unwrap();
        let flags = SolverArgs { beta: Some(3.0), ..Default::default() };
        let s = flags.resolve(&file, &Settings::default()).unwrap();
        assert_eq!(s.solver.lambda0, 0.7);
        assert_eq!(s.kernel.beta, 3.0);
        assert_eq!(s.solver.t_max, SolverConfig::default().t_max);
        file.finish().unwrap();
    }

    #[test]
    fn rejects_bad_files() {
        assert!(ConfigFile::parse("lambda0 0.5").is_err());
        assert!(ConfigFile::parse("a = 1\na = 2").is_err());
        let file = ConfigFile::parse("lambda0 = abc").unwrap();
        assert!(SolverArgs::default().resolve(&file, &Settings::default()).is_err());
        let file = ConfigFile::parse("lambdaa = 1").unwrap();
        SolverArgs::default().resolve(&file, &Settings::default()).unwrap();
        assert!(file.finish().is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let flags = SolverArgs { schatten_p: Some(2.0), ..Default::default() };
        assert!(flags.resolve(&ConfigFile::empty(), &Settings::default()).is_err());
    }
}
