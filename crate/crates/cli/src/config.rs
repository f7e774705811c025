//! Run configuration: the JSON file behind `--config`, merged with flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ncgtwist_core::suq2::{DiracSpectrum, Suq2Config};
use serde::Deserialize;

/// A configuration problem. Reported as a `ConfigError` record and exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Contents of a config file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<String>,
    /// SU_q(2) model file, relative to the config file.
    pub model: Option<PathBuf>,
    pub beta: Option<f64>,
    pub n_max: Option<usize>,
    pub dim: Option<usize>,
    pub hilbert_dim: Option<usize>,
    pub trials: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub cutoffs: Option<Vec<usize>>,
    pub terms: Option<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Option<u64>,
}

/// Validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub model: Suq2Config,
    pub beta: f64,
    pub n_max: usize,
    /// Largest algebra dimension in `verify-complex`.
    pub dim: usize,
    /// Largest Hilbert space dimension in `verify-jlo`.
    pub hilbert_dim: usize,
    pub trials: usize,
    pub t_grid: Vec<f64>,
    /// Spin cutoffs of the quantum growth probe.
    pub cutoffs: Vec<usize>,
    /// Series terms kept in pairings.
    pub terms: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub seed: u64,
}

/// Geometric grid from 2 down to 0.2.
pub fn default_t_grid() -> Vec<f64> {
    (0..12)
        .map(|k| 2.0 * 0.1f64.powf(k as f64 / 11.0))
        .collect()
}

impl RunConfig {
    pub fn defaults(command: &str) -> Self {
        let (trials, n_max) = match command {
            "verify-jlo" => (50, 3),
            "verify-complex" => (100, 4),
            _ => (100, 3),
        };
        // The SU_q(2) pairing chain runs in the full truncation: 30 terms
        // exceed the evaluation budget at degree cutoff 6, and cutoff 6
        // takes minutes even with 10.
        let (terms, model) = if command == "pairing-suq2" {
            let model = Suq2Config {
                degree_cutoff: 4,
                ..Suq2Config::default()
            };
            (10, model)
        } else {
            (30, Suq2Config::default())
        };
        RunConfig {
            command: command.to_string(),
            model,
            beta: 1.0,
            n_max,
            dim: 4,
            hilbert_dim: 8,
            trials,
            t_grid: default_t_grid(),
            cutoffs: vec![3, 4, 5],
            terms,
            tolerances: BTreeMap::new(),
            seed: 0,
        }
    }

    /// Reads and validates the config at `path` (if any) for `command`;
    /// `seed` overrides the file's seed.
    pub fn load(
        command: &str,
        path: Option<&Path>,
        seed: Option<u64>,
    ) -> Result<Self, ConfigError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| bad(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| bad(format!("{}: {e}", p.display())))?
            }
            None => ConfigFile::default(),
        };
        let base = path.and_then(Path::parent).unwrap_or(Path::new("."));
        Self::from_file(command, file, base, seed)
    }

    pub fn from_file(
        command: &str,
        file: ConfigFile,
        base: &Path,
        seed: Option<u64>,
    ) -> Result<Self, ConfigError> {
        if let Some(c) = &file.command {
            if c != command {
                return Err(bad(format!(
                    "config is for command {c:?} but {command:?} was requested"
                )));
            }
        }
        let mut cfg = RunConfig::defaults(command);
        if let Some(m) = &file.model {
            cfg.model = load_model(&base.join(m))?;
        }
        cfg.beta = file.beta.unwrap_or(cfg.beta);
        cfg.n_max = file.n_max.unwrap_or(cfg.n_max);
        cfg.dim = file.dim.unwrap_or(cfg.dim);
        cfg.hilbert_dim = file.hilbert_dim.unwrap_or(cfg.hilbert_dim);
        cfg.trials = file.trials.unwrap_or(cfg.trials);
        cfg.t_grid = file.t_grid.unwrap_or(cfg.t_grid);
        cfg.cutoffs = file.cutoffs.unwrap_or(cfg.cutoffs);
        cfg.terms = file.terms.unwrap_or(cfg.terms);
        cfg.tolerances = file.tolerances;
        cfg.seed = seed.or(file.seed).unwrap_or(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(bad(format!("beta must be positive, got {}", self.beta)));
        }
        if self.n_max < 1 {
            return Err(bad("n_max must be at least 1"));
        }
        if self.trials < 1 {
            return Err(bad("trials must be at least 1"));
        }
        if self.dim < 2 {
            return Err(bad("dim must be at least 2"));
        }
        if !(2..=64).contains(&self.hilbert_dim) {
            return Err(bad("hilbert_dim must lie in 2..=64"));
        }
        if self.t_grid.len() < 2 || self.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(bad("t_grid needs at least two positive values"));
        }
        if self.cutoffs.is_empty() || self.cutoffs.iter().any(|&c| c == 0 || c > 40) {
            return Err(bad("cutoffs must be spins in 1..=40"));
        }
        for (name, tol) in &self.tolerances {
            if !(tol.is_finite() && *tol >= 0.0) {
                return Err(bad(format!("tolerance for {name} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Tolerance for `check`, from the config or the given default.
    pub fn tolerance(&self, check: &str, default: f64) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(default)
    }
}

/// Reads a model file and validates it without building the truncation.
pub fn load_model(path: &Path) -> Result<Suq2Config, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read model {}: {e}", path.display())))?;
    let model: Suq2Config =
        serde_json::from_str(&text).map_err(|e| bad(format!("model {}: {e}", path.display())))?;
    if !(model.q > 0.0 && model.q < 1.0) {
        return Err(bad(format!("model q must lie in (0, 1), got {}", model.q)));
    }
    if model.degree_cutoff < 1 || model.degree_cutoff > 12 {
        return Err(bad("model degree_cutoff must lie in 1..=12"));
    }
    if !(model.epsilon_u > 0.0 && model.epsilon_u < 1.0) {
        return Err(bad("model epsilon_u must lie in (0, 1)"));
    }
    DiracSpectrum::from_table(&model.dirac).map_err(|e| bad(format!("model dirac table: {e}")))?;
    Ok(model)
}
