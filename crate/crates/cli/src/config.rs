//! Run settings: built-in defaults, overridden by a TOML file, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::Deserialize;
use seqot::embed::{EmbeddingTable, LossWeights, OovPolicy, UNK_TOKEN};
use seqot::{CostKind, SolverConfig};

use crate::error::{CliError, Result};
use crate::input::read_to_string;

/// Environment variable naming a configuration file.
pub const CONFIG_ENV: &str = "SEQOT_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Ipot,
    Sinkhorn,
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ipot" => Ok(SolverKind::Ipot),
            "sinkhorn" => Ok(SolverKind::Sinkhorn),
            other => Err(format!("unknown solver {other:?} (expected ipot or sinkhorn)")),
        }
    }
}

/// Out-of-vocabulary handling as configured; `Auto` substitutes `UNK` when
/// the table has it and skips the token otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovSetting {
    #[default]
    Auto,
    Skip,
    Unk,
    Error,
}

impl OovSetting {
    pub fn policy(self, table: &EmbeddingTable) -> OovPolicy {
        match self {
            OovSetting::Auto => OovPolicy::default_for(table),
            OovSetting::Skip => OovPolicy::Skip,
            OovSetting::Unk => OovPolicy::Unk(UNK_TOKEN.to_string()),
            OovSetting::Error => OovPolicy::Error,
        }
    }
}

impl FromStr for OovSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(OovSetting::Auto),
            "skip" => Ok(OovSetting::Skip),
            "unk" => Ok(OovSetting::Unk),
            "error" => Ok(OovSetting::Error),
            other => Err(format!("unknown oov policy {other:?} (expected auto, skip, unk or error)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub cost: CostKind,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
    pub tau: f64,
    pub weights: LossWeights,
    pub oov: OovSetting,
    pub dump_plans: Option<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            cost: CostKind::default(),
            solver: SolverKind::default(),
            solver_config: SolverConfig::default(),
            tau: seqot::embed::DEFAULT_TAU,
            weights: LossWeights::default(),
            oov: OovSetting::default(),
            dump_plans: None,
            seed: 0,
            threads: None,
        }
    }
}

/// Every setting as an optional override. Used both for the TOML file (keys
/// are the field names) and for the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Cost function: cosine, euclidean or squared_euclidean.
    #[arg(long)]
    pub cost: Option<String>,
    /// OT solver: ipot or sinkhorn.
    #[arg(long)]
    pub solver: Option<String>,
    /// IPOT proximal step size.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Inner scaling sweeps per IPOT step.
    #[arg(long)]
    pub inner_k: Option<usize>,
    /// Sinkhorn regularization (larger is weaker).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Maximum outer iterations.
    #[arg(long)]
    pub outer_iters: Option<usize>,
    /// Plan-change stopping tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Soft-argmax temperature.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Weight of the sequence OT term.
    #[arg(long)]
    pub gamma_seq: Option<f64>,
    /// Weight of the copy OT term.
    #[arg(long)]
    pub gamma_copy: Option<f64>,
    /// Out-of-vocabulary policy: auto, skip, unk or error.
    #[arg(long)]
    pub oov: Option<String>,
    /// Write transport plans to this file.
    #[arg(long)]
    pub dump_plans: Option<PathBuf>,
    /// Seed for generated fixtures.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn parse_field<T: FromStr<Err = String>>(value: &Option<String>) -> Result<Option<T>> {
    value.as_deref().map(str::parse).transpose().map_err(CliError::Config)
}

impl Settings {
    /// Applies `overrides` on top of `self` and validates the result.
    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(cost) = parse_field(&o.cost)? {
            self.cost = cost;
        }
        if let Some(solver) = parse_field(&o.solver)? {
            self.solver = solver;
        }
        if let Some(oov) = parse_field(&o.oov)? {
            self.oov = oov;
        }
        let cfg = &mut self.solver_config;
        cfg.beta = o.beta.unwrap_or(cfg.beta);
        cfg.inner_k = o.inner_k.unwrap_or(cfg.inner_k);
        cfg.epsilon = o.epsilon.unwrap_or(cfg.epsilon);
        cfg.outer_iters = o.outer_iters.unwrap_or(cfg.outer_iters);
        cfg.tolerance = o.tolerance.unwrap_or(cfg.tolerance);
        cfg.validate()?;
        self.tau = o.tau.unwrap_or(self.tau);
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(CliError::Config(format!("tau must be positive, got {}", self.tau)));
        }
        self.weights = LossWeights::new(
            o.gamma_seq.unwrap_or(self.weights.gamma_seq),
            o.gamma_copy.unwrap_or(self.weights.gamma_copy),
        )?;
        if o.dump_plans.is_some() {
            self.dump_plans.clone_from(&o.dump_plans);
        }
        self.seed = o.seed.unwrap_or(self.seed);
        if let Some(threads) = o.threads {
            if threads == 0 {
                return Err(CliError::Config("threads must be at least 1".into()));
            }
            self.threads = Some(threads);
        }
        Ok(self)
    }

    /// Defaults, then the file at `path` (or `$SEQOT_CONFIG`), then `flags`.
    pub fn resolve(path: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut settings = Settings::default();
        if let Some(path) = path.or(env_path.as_deref()) {
            settings = settings.apply(&parse_config_file(path)?)?;
        }
        settings.apply(flags)
    }
}

pub fn parse_config_file(path: &Path) -> Result<Overrides> {
    let text = read_to_string(path)?;
    toml::from_str(&text).map_err(|e| {
        let message = e.message().to_owned();
        CliError::Config(format!("{}: {message}", path.display()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = Settings::default();
        assert_eq!(s.cost, CostKind::Cosine);
        assert_eq!(s.solver, SolverKind::Ipot);
        assert_eq!(s.solver_config.beta, 0.5);
        assert_eq!(s.solver_config.inner_k, 1);
        assert_eq!(s.weights.gamma_seq, 0.1);
    }

    #[test]
    fn flags_override_file_values() {
        let file: Overrides = toml::from_str("beta = 0.25\ncost = \"euclidean\"\nouter_iters = 50\n").unwrap();
        let flags = Overrides {
            beta: Some(1.0),
            ..Overrides::default()
        };
        let s = Settings::default().apply(&file).unwrap().apply(&flags).unwrap();
        assert_eq!(s.solver_config.beta, 1.0);
        assert_eq!(s.solver_config.outer_iters, 50);
        assert_eq!(s.cost, CostKind::Euclidean);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(toml::from_str::<Overrides>("betta = 1.0").is_err());
        let bad = |o: Overrides| Settings::default().apply(&o).is_err();
        assert!(bad(Overrides {
            cost: Some("manhattan".into()),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            beta: Some(-1.0),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            threads: Some(0),
            ..Overrides::default()
        }));
        assert!(bad(Overrides {
            oov: Some("drop".into()),
            ..Overrides::default()
        }));
    }
}
