//! Run configuration: a flat `key = value` document per experiment, with
//! documented defaults for every field, strict unknown-key rejection, and a
//! canonical serialization that round-trips and is echoed into every output
//! file header.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::error::ConfigError;
use crate::observables::End;

pub const DEFAULT_SEED: u64 = 42;

// Baseline model parameters: the steady-state trajectory defaults.
pub const DEFAULT_GAMMA: f64 = 0.9;
pub const DEFAULT_MU: f64 = 1e-3;
pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_N_AGENTS: usize = 2500;
pub const DEFAULT_RECORD_EVERY: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Trajectory,
    PhaseGrid,
    FiniteSize,
    Mobility,
    Ergodicity,
    Transient,
    Grw,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Trajectory => "trajectory",
            ExperimentKind::PhaseGrid => "phase-grid",
            ExperimentKind::FiniteSize => "finite-size",
            ExperimentKind::Mobility => "mobility",
            ExperimentKind::Ergodicity => "ergodicity",
            ExperimentKind::Transient => "transient",
            ExperimentKind::Grw => "grw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "trajectory" => ExperimentKind::Trajectory,
            "phase-grid" => ExperimentKind::PhaseGrid,
            "finite-size" => ExperimentKind::FiniteSize,
            "mobility" => ExperimentKind::Mobility,
            "ergodicity" => ExperimentKind::Ergodicity,
            "transient" => ExperimentKind::Transient,
            "grw" => ExperimentKind::Grw,
            _ => return None,
        })
    }

    pub fn default_out(&self) -> PathBuf {
        PathBuf::from(format!("{}.csv", self.as_str()))
    }
}

/// Rank-distribution trajectory of a single run.
///
/// Defaults: gamma 0.9, mu 1e-3, alpha 0.1, n_agents 2500, t_max 40000,
/// record_every 10, percentile_fraction 0.01, collapse_tol 0.05,
/// collapse_exclude_bottom 0.01.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub gamma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub n_agents: usize,
    pub t_max: u64,
    pub record_every: u64,
    pub percentile_fraction: f64,
    pub collapse_tol: f64,
    pub collapse_exclude_bottom: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Late-time percentile statistic over a log-spaced (mu, alpha) lattice.
///
/// Defaults: gamma 1.0, n_agents 2500, mu in [1e-5, 1e-1] with 13 points,
/// alpha in [1e-3, 0.5] with 13 points, t_final 1000, record_every 10,
/// realizations 16, which "poorest", percentile_fraction 0.01.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridConfig {
    pub gamma: f64,
    pub n_agents: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_points: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_points: usize,
    pub t_final: u64,
    pub record_every: u64,
    pub realizations: u32,
    pub which: End,
    pub percentile_fraction: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Late-time rescaled wealth of the richest agent across system sizes.
///
/// Defaults: gamma 0.0, mu 1e-2, alpha 0.1, n_values [100, 400, 1600],
/// t_final 5000, realizations 16.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSizeConfig {
    pub gamma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub n_values: Vec<usize>,
    pub t_final: u64,
    pub realizations: u32,
    pub seed: u64,
    pub out: PathBuf,
}

/// Rank correlation against the initial ranking, ensemble averaged.
///
/// Defaults: gamma 0.9, mu 1e-3, alpha 0.1, n_agents 2500, t_max 10000,
/// record_every 10, realizations 8.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub gamma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub n_agents: usize,
    pub t_max: u64,
    pub record_every: u64,
    pub realizations: u32,
    pub seed: u64,
    pub out: PathBuf,
}

/// Inverse wealth-metric ratio of one trajectory.
///
/// Defaults: gamma 0.5, mu 1e-4, alpha 0.01, n_agents 2500, t_max 100000,
/// record_every 10.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityConfig {
    pub gamma: f64,
    pub mu: f64,
    pub alpha: f64,
    pub n_agents: usize,
    pub t_max: u64,
    pub record_every: u64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Steady-state time against gamma, with the power-law fit.
///
/// Defaults: gamma_values [0.5, 0.7, 0.8, 0.9], mu 1e-3, alpha 0.1,
/// n_agents 400, t_max 100000, record_every 50, collapse_tol 0.05,
/// collapse_exclude_bottom 0.01.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientConfig {
    pub gamma_values: Vec<f64>,
    pub mu: f64,
    pub alpha: f64,
    pub n_agents: usize,
    pub t_max: u64,
    pub record_every: u64,
    pub collapse_tol: f64,
    pub collapse_exclude_bottom: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Geometric random walk ensemble statistics.
///
/// Defaults: mu 0.01, sigma 0.2, n_walkers 10000, steps 1000,
/// record_every 10.
#[derive(Debug, Clone, PartialEq)]
pub struct GrwConfig {
    pub mu: f64,
    pub sigma: f64,
    pub n_walkers: usize,
    pub steps: u64,
    pub record_every: u64,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Trajectory(TrajectoryConfig),
    PhaseGrid(PhaseGridConfig),
    FiniteSize(FiniteSizeConfig),
    Mobility(MobilityConfig),
    Ergodicity(ErgodicityConfig),
    Transient(TransientConfig),
    Grw(GrwConfig),
}

impl RunConfig {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            RunConfig::Trajectory(_) => ExperimentKind::Trajectory,
            RunConfig::PhaseGrid(_) => ExperimentKind::PhaseGrid,
            RunConfig::FiniteSize(_) => ExperimentKind::FiniteSize,
            RunConfig::Mobility(_) => ExperimentKind::Mobility,
            RunConfig::Ergodicity(_) => ExperimentKind::Ergodicity,
            RunConfig::Transient(_) => ExperimentKind::Transient,
            RunConfig::Grw(_) => ExperimentKind::Grw,
        }
    }

    pub fn out(&self) -> &PathBuf {
        match self {
            RunConfig::Trajectory(c) => &c.out,
            RunConfig::PhaseGrid(c) => &c.out,
            RunConfig::FiniteSize(c) => &c.out,
            RunConfig::Mobility(c) => &c.out,
            RunConfig::Ergodicity(c) => &c.out,
            RunConfig::Transient(c) => &c.out,
            RunConfig::Grw(c) => &c.out,
        }
    }

    pub fn set_out(&mut self, out: PathBuf) {
        match self {
            RunConfig::Trajectory(c) => c.out = out,
            RunConfig::PhaseGrid(c) => c.out = out,
            RunConfig::FiniteSize(c) => c.out = out,
            RunConfig::Mobility(c) => c.out = out,
            RunConfig::Ergodicity(c) => c.out = out,
            RunConfig::Transient(c) => c.out = out,
            RunConfig::Grw(c) => c.out = out,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            RunConfig::Trajectory(c) => c.seed = seed,
            RunConfig::PhaseGrid(c) => c.seed = seed,
            RunConfig::FiniteSize(c) => c.seed = seed,
            RunConfig::Mobility(c) => c.seed = seed,
            RunConfig::Ergodicity(c) => c.seed = seed,
            RunConfig::Transient(c) => c.seed = seed,
            RunConfig::Grw(c) => c.seed = seed,
        }
    }

    /// Canonical document with every field resolved; `parse_config` of this
    /// text reproduces the config exactly.
    pub fn to_document(&self) -> String {
        let mut lines = vec![format!("experiment = \"{}\"", self.kind().as_str())];
        match self {
            RunConfig::Trajectory(c) => {
                lines.push(fmt_f64("gamma", c.gamma));
                lines.push(fmt_f64("mu", c.mu));
                lines.push(fmt_f64("alpha", c.alpha));
                lines.push(format!("n_agents = {}", c.n_agents));
                lines.push(format!("t_max = {}", c.t_max));
                lines.push(format!("record_every = {}", c.record_every));
                lines.push(fmt_f64("percentile_fraction", c.percentile_fraction));
                lines.push(fmt_f64("collapse_tol", c.collapse_tol));
                lines.push(fmt_f64("collapse_exclude_bottom", c.collapse_exclude_bottom));
            }
            RunConfig::PhaseGrid(c) => {
                lines.push(fmt_f64("gamma", c.gamma));
                lines.push(format!("n_agents = {}", c.n_agents));
                lines.push(fmt_f64("mu_min", c.mu_min));
                lines.push(fmt_f64("mu_max", c.mu_max));
                lines.push(format!("mu_points = {}", c.mu_points));
                lines.push(fmt_f64("alpha_min", c.alpha_min));
                lines.push(fmt_f64("alpha_max", c.alpha_max));
                lines.push(format!("alpha_points = {}", c.alpha_points));
                lines.push(format!("t_final = {}", c.t_final));
                lines.push(format!("record_every = {}", c.record_every));
                lines.push(format!("realizations = {}", c.realizations));
                lines.push(format!("which = \"{}\"", c.which.as_str()));
                lines.push(fmt_f64("percentile_fraction", c.percentile_fraction));
            }
            RunConfig::FiniteSize(c) => {
                lines.push(fmt_f64("gamma", c.gamma));
                lines.push(fmt_f64("mu", c.mu));
                lines.push(fmt_f64("alpha", c.alpha));
                lines.push(format!(
                    "n_values = [{}]",
                    c.n_values
                        .iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                lines.push(format!("t_final = {}", c.t_final));
                lines.push(format!("realizations = {}", c.realizations));
            }
            RunConfig::Mobility(c) => {
                lines.push(fmt_f64("gamma", c.gamma));
                lines.push(fmt_f64("mu", c.mu));
                lines.push(fmt_f64("alpha", c.alpha));
                lines.push(format!("n_agents = {}", c.n_agents));
                lines.push(format!("t_max = {}", c.t_max));
                lines.push(format!("record_every = {}", c.record_every));
                lines.push(format!("realizations = {}", c.realizations));
            }
            RunConfig::Ergodicity(c) => {
                lines.push(fmt_f64("gamma", c.gamma));
                lines.push(fmt_f64("mu", c.mu));
                lines.push(fmt_f64("alpha", c.alpha));
                lines.push(format!("n_agents = {}", c.n_agents));
                lines.push(format!("t_max = {}", c.t_max));
                lines.push(format!("record_every = {}", c.record_every));
            }
            RunConfig::Transient(c) => {
                lines.push(format!(
                    "gamma_values = [{}]",
                    c.gamma_values
                        .iter()
                        .map(|g| format!("{g:?}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                lines.push(fmt_f64("mu", c.mu));
                lines.push(fmt_f64("alpha", c.alpha));
                lines.push(format!("n_agents = {}", c.n_agents));
                lines.push(format!("t_max = {}", c.t_max));
                lines.push(format!("record_every = {}", c.record_every));
                lines.push(fmt_f64("collapse_tol", c.collapse_tol));
                lines.push(fmt_f64("collapse_exclude_bottom", c.collapse_exclude_bottom));
            }
            RunConfig::Grw(c) => {
                lines.push(fmt_f64("mu", c.mu));
                lines.push(fmt_f64("sigma", c.sigma));
                lines.push(format!("n_walkers = {}", c.n_walkers));
                lines.push(format!("steps = {}", c.steps));
                lines.push(format!("record_every = {}", c.record_every));
            }
        }
        let (seed, out) = match self {
            RunConfig::Trajectory(c) => (c.seed, &c.out),
            RunConfig::PhaseGrid(c) => (c.seed, &c.out),
            RunConfig::FiniteSize(c) => (c.seed, &c.out),
            RunConfig::Mobility(c) => (c.seed, &c.out),
            RunConfig::Ergodicity(c) => (c.seed, &c.out),
            RunConfig::Transient(c) => (c.seed, &c.out),
            RunConfig::Grw(c) => (c.seed, &c.out),
        };
        lines.push(format!("seed = {seed}"));
        lines.push(format!("out = {:?}", out.display().to_string()));
        lines.join("\n") + "\n"
    }
}

fn fmt_f64(key: &str, value: f64) -> String {
    // {:?} prints the shortest representation that round-trips, and always
    // includes a decimal point or exponent, which TOML requires.
    format!("{key} = {value:?}")
}

/// Typed, consumed-key view over a parsed TOML table.
struct Doc {
    table: toml::Table,
    used: BTreeSet<String>,
}

impl Doc {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| ConfigError::new("<document>", format!("not a key-value document: {e}")))?;
        Ok(Self {
            table,
            used: BTreeSet::new(),
        })
    }

    fn get(&mut self, key: &str) -> Option<&toml::Value> {
        let v = self.table.get(key);
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(toml::Value::Float(f)) => Ok(*f),
            Some(toml::Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(ConfigError::new(key, "must be a number")),
        }
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(_) => Err(ConfigError::new(key, "must be a non-negative integer")),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.u64(key, default as u64)? as usize)
    }

    fn u32(&mut self, key: &str, default: u32) -> Result<u32, ConfigError> {
        let v = self.u64(key, default as u64)?;
        u32::try_from(v).map_err(|_| ConfigError::new(key, "value too large"))
    }

    fn string(&mut self, key: &str, default: &str) -> Result<String, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_string()),
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(ConfigError::new(key, "must be a string")),
        }
    }

    fn f64_array(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Float(f) => Ok(*f),
                    toml::Value::Integer(i) => Ok(*i as f64),
                    _ => Err(ConfigError::new(key, "must be an array of numbers")),
                })
                .collect(),
            Some(_) => Err(ConfigError::new(key, "must be an array of numbers")),
        }
    }

    fn usize_array(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(ConfigError::new(key, "must be an array of non-negative integers")),
                })
                .collect(),
            Some(_) => Err(ConfigError::new(key, "must be an array of non-negative integers")),
        }
    }

    /// Reject any key that was never consumed.
    fn finish(self, kind: ExperimentKind) -> Result<(), ConfigError> {
        for key in self.table.keys() {
            if !self.used.contains(key) {
                return Err(ConfigError::new(
                    key,
                    format!("unknown key for experiment \"{}\"", kind.as_str()),
                ));
            }
        }
        Ok(())
    }
}

fn check(cond: bool, key: &str, constraint: &str) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::new(key, constraint))
    }
}

fn check_model(gamma: f64, mu: f64, alpha: f64, n_agents: usize) -> Result<(), ConfigError> {
    let params = crate::engine::ModelParams {
        gamma,
        mu,
        alpha,
        n_agents,
        seed: 0,
    };
    params.validate()
}

fn check_fraction(value: f64, key: &str) -> Result<(), ConfigError> {
    check(value > 0.0 && value <= 1.0, key, "must be in (0, 1]")
}

fn check_cadence(record_every: u64, horizon: u64, horizon_key: &str) -> Result<(), ConfigError> {
    check(record_every >= 1, "record_every", "must be at least 1")?;
    check(
        record_every <= horizon,
        "record_every",
        &format!("must not exceed {horizon_key}"),
    )
}

/// Parse a configuration document for the given experiment. An `experiment`
/// key inside the document must agree with `kind`. Missing keys take their
/// documented defaults; unknown keys are rejected.
pub fn parse_config(text: &str, kind: ExperimentKind) -> Result<RunConfig, ConfigError> {
    let mut doc = Doc::parse(text)?;
    let stated = doc.string("experiment", kind.as_str())?;
    match ExperimentKind::parse(&stated) {
        Some(k) if k == kind => {}
        Some(_) => {
            return Err(ConfigError::new(
                "experiment",
                format!(
                    "config is for \"{stated}\" but the subcommand is \"{}\"",
                    kind.as_str()
                ),
            ));
        }
        None => {
            return Err(ConfigError::new(
                "experiment",
                format!("unknown experiment \"{stated}\""),
            ));
        }
    }
    let seed = doc.u64("seed", DEFAULT_SEED)?;
    let out = PathBuf::from(doc.string("out", &kind.default_out().display().to_string())?);

    let config = match kind {
        ExperimentKind::Trajectory => {
            let c = TrajectoryConfig {
                gamma: doc.f64("gamma", DEFAULT_GAMMA)?,
                mu: doc.f64("mu", DEFAULT_MU)?,
                alpha: doc.f64("alpha", DEFAULT_ALPHA)?,
                n_agents: doc.usize("n_agents", DEFAULT_N_AGENTS)?,
                t_max: doc.u64("t_max", 40_000)?,
                record_every: doc.u64("record_every", DEFAULT_RECORD_EVERY)?,
                percentile_fraction: doc.f64("percentile_fraction", 0.01)?,
                collapse_tol: doc.f64("collapse_tol", 0.05)?,
                collapse_exclude_bottom: doc.f64("collapse_exclude_bottom", 0.01)?,
                seed,
                out,
            };
            check_model(c.gamma, c.mu, c.alpha, c.n_agents)?;
            check(c.t_max >= 1, "t_max", "must be at least 1")?;
            check_cadence(c.record_every, c.t_max, "t_max")?;
            check_fraction(c.percentile_fraction, "percentile_fraction")?;
            check(c.collapse_tol > 0.0, "collapse_tol", "must be > 0")?;
            check(
                (0.0..1.0).contains(&c.collapse_exclude_bottom),
                "collapse_exclude_bottom",
                "must be in [0, 1)",
            )?;
            RunConfig::Trajectory(c)
        }
        ExperimentKind::PhaseGrid => {
            let c = PhaseGridConfig {
                gamma: doc.f64("gamma", 1.0)?,
                n_agents: doc.usize("n_agents", DEFAULT_N_AGENTS)?,
                mu_min: doc.f64("mu_min", 1e-5)?,
                mu_max: doc.f64("mu_max", 1e-1)?,
                mu_points: doc.usize("mu_points", 13)?,
                alpha_min: doc.f64("alpha_min", 1e-3)?,
                alpha_max: doc.f64("alpha_max", 0.5)?,
                alpha_points: doc.usize("alpha_points", 13)?,
                t_final: doc.u64("t_final", 1000)?,
                record_every: doc.u64("record_every", DEFAULT_RECORD_EVERY)?,
                realizations: doc.u32("realizations", 16)?,
                which: parse_which(&mut doc)?,
                percentile_fraction: doc.f64("percentile_fraction", 0.01)?,
                seed,
                out,
            };
            check_model(c.gamma, c.mu_max, c.alpha_max, c.n_agents)?;
            check(c.mu_min > 0.0, "mu_min", "must be > 0 (log-spaced axis)")?;
            check(c.mu_max > c.mu_min, "mu_max", "must exceed mu_min")?;
            check(c.mu_points >= 2, "mu_points", "must be at least 2")?;
            check(c.alpha_min > 0.0, "alpha_min", "must be > 0 (log-spaced axis)")?;
            check(c.alpha_max > c.alpha_min, "alpha_max", "must exceed alpha_min")?;
            check(c.alpha_points >= 2, "alpha_points", "must be at least 2")?;
            check(c.t_final >= 2, "t_final", "must be at least 2")?;
            check(
                c.record_every >= 1 && c.record_every * 2 <= c.t_final,
                "record_every",
                "must be at least 1 and at most t_final / 2",
            )?;
            check(c.realizations >= 1, "realizations", "must be at least 1")?;
            check_fraction(c.percentile_fraction, "percentile_fraction")?;
            RunConfig::PhaseGrid(c)
        }
        ExperimentKind::FiniteSize => {
            let c = FiniteSizeConfig {
                gamma: doc.f64("gamma", 0.0)?,
                mu: doc.f64("mu", 1e-2)?,
                alpha: doc.f64("alpha", DEFAULT_ALPHA)?,
                n_values: doc.usize_array("n_values", &[100, 400, 1600])?,
                t_final: doc.u64("t_final", 5000)?,
                realizations: doc.u32("realizations", 16)?,
                seed,
                out,
            };
            check_model(c.gamma, c.mu, c.alpha, 2)?;
            check(!c.n_values.is_empty(), "n_values", "must not be empty")?;
            check(
                c.n_values.windows(2).all(|w| w[0] < w[1]),
                "n_values",
                "must be strictly increasing",
            )?;
            check(
                c.n_values.iter().all(|n| *n >= 2),
                "n_values",
                "every entry must be at least 2",
            )?;
            check(c.t_final >= 1, "t_final", "must be at least 1")?;
            check(c.realizations >= 1, "realizations", "must be at least 1")?;
            RunConfig::FiniteSize(c)
        }
        ExperimentKind::Mobility => {
            let c = MobilityConfig {
                gamma: doc.f64("gamma", DEFAULT_GAMMA)?,
                mu: doc.f64("mu", DEFAULT_MU)?,
                alpha: doc.f64("alpha", DEFAULT_ALPHA)?,
                n_agents: doc.usize("n_agents", DEFAULT_N_AGENTS)?,
                t_max: doc.u64("t_max", 10_000)?,
                record_every: doc.u64("record_every", DEFAULT_RECORD_EVERY)?,
                realizations: doc.u32("realizations", 8)?,
                seed,
                out,
            };
            check_model(c.gamma, c.mu, c.alpha, c.n_agents)?;
            check(c.t_max >= 1, "t_max", "must be at least 1")?;
            check_cadence(c.record_every, c.t_max, "t_max")?;
            check(c.realizations >= 1, "realizations", "must be at least 1")?;
            RunConfig::Mobility(c)
        }
        ExperimentKind::Ergodicity => {
            let c = ErgodicityConfig {
                gamma: doc.f64("gamma", 0.5)?,
                mu: doc.f64("mu", 1e-4)?,
                alpha: doc.f64("alpha", 0.01)?,
                n_agents: doc.usize("n_agents", DEFAULT_N_AGENTS)?,
                t_max: doc.u64("t_max", 100_000)?,
                record_every: doc.u64("record_every", DEFAULT_RECORD_EVERY)?,
                seed,
                out,
            };
            check_model(c.gamma, c.mu, c.alpha, c.n_agents)?;
            check(c.t_max >= 1, "t_max", "must be at least 1")?;
            check_cadence(c.record_every, c.t_max, "t_max")?;
            RunConfig::Ergodicity(c)
        }
        ExperimentKind::Transient => {
            let c = TransientConfig {
                gamma_values: doc.f64_array("gamma_values", &[0.5, 0.7, 0.8, 0.9])?,
                mu: doc.f64("mu", DEFAULT_MU)?,
                alpha: doc.f64("alpha", DEFAULT_ALPHA)?,
                n_agents: doc.usize("n_agents", 400)?,
                t_max: doc.u64("t_max", 100_000)?,
                record_every: doc.u64("record_every", 50)?,
                collapse_tol: doc.f64("collapse_tol", 0.05)?,
                collapse_exclude_bottom: doc.f64("collapse_exclude_bottom", 0.01)?,
                seed,
                out,
            };
            check_model(0.5, c.mu, c.alpha, c.n_agents)?;
            check(!c.gamma_values.is_empty(), "gamma_values", "must not be empty")?;
            check(
                c.gamma_values.windows(2).all(|w| w[0] < w[1]),
                "gamma_values",
                "must be strictly increasing",
            )?;
            check(
                c.gamma_values.iter().all(|g| (0.0..1.0).contains(g)),
                "gamma_values",
                "every entry must be in [0, 1)",
            )?;
            check(c.t_max >= 1, "t_max", "must be at least 1")?;
            check_cadence(c.record_every, c.t_max, "t_max")?;
            check(c.collapse_tol > 0.0, "collapse_tol", "must be > 0")?;
            check(
                (0.0..1.0).contains(&c.collapse_exclude_bottom),
                "collapse_exclude_bottom",
                "must be in [0, 1)",
            )?;
            RunConfig::Transient(c)
        }
        ExperimentKind::Grw => {
            let c = GrwConfig {
                mu: doc.f64("mu", 0.01)?,
                sigma: doc.f64("sigma", 0.2)?,
                n_walkers: doc.usize("n_walkers", 10_000)?,
                steps: doc.u64("steps", 1000)?,
                record_every: doc.u64("record_every", DEFAULT_RECORD_EVERY)?,
                seed,
                out,
            };
            check(c.mu.is_finite(), "mu", "must be finite")?;
            check(c.sigma >= 0.0 && c.sigma.is_finite(), "sigma", "must be a finite value >= 0")?;
            check(c.n_walkers >= 1, "n_walkers", "must be at least 1")?;
            check(c.steps >= 1, "steps", "must be at least 1")?;
            check_cadence(c.record_every, c.steps, "steps")?;
            RunConfig::Grw(c)
        }
    };
    doc.finish(kind)?;
    Ok(config)
}

fn parse_which(doc: &mut Doc) -> Result<End, ConfigError> {
    match doc.string("which", "poorest")?.as_str() {
        "poorest" => Ok(End::Poorest),
        "richest" => Ok(End::Richest),
        other => Err(ConfigError::new(
            "which",
            format!("must be \"poorest\" or \"richest\", got \"{other}\""),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_all_defaults() {
        let cfg = parse_config("", ExperimentKind::Trajectory).unwrap();
        let RunConfig::Trajectory(c) = cfg else {
            panic!("wrong kind")
        };
        assert_eq!(c.n_agents, 2500);
        assert_eq!(c.gamma, 0.9);
        assert_eq!(c.mu, 1e-3);
        assert_eq!(c.alpha, 0.1);
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.out, PathBuf::from("trajectory.csv"));
    }

    #[test]
    fn constraint_violations_name_the_key() {
        let err = parse_config("alpha = 1.5", ExperimentKind::Trajectory).unwrap_err();
        assert_eq!(err.key, "alpha");
        assert!(err.message.contains("[0, 1)"));

        let err = parse_config("gamma = -1.0", ExperimentKind::Mobility).unwrap_err();
        assert_eq!(err.key, "gamma");

        let err = parse_config("sigma = -0.5", ExperimentKind::Grw).unwrap_err();
        assert_eq!(err.key, "sigma");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("gama = 0.9", ExperimentKind::Trajectory).unwrap_err();
        assert_eq!(err.key, "gama");
        assert!(err.message.contains("unknown key"));

        // A key valid for another experiment is still unknown here.
        let err = parse_config("sigma = 0.2", ExperimentKind::Trajectory).unwrap_err();
        assert_eq!(err.key, "sigma");
    }

    #[test]
    fn experiment_key_must_match_subcommand() {
        let err = parse_config("experiment = \"grw\"", ExperimentKind::Trajectory).unwrap_err();
        assert_eq!(err.key, "experiment");
        let ok = parse_config("experiment = \"trajectory\"", ExperimentKind::Trajectory);
        assert!(ok.is_ok());
    }

    #[test]
    fn every_kind_round_trips_through_its_document() {
        let kinds = [
            ExperimentKind::Trajectory,
            ExperimentKind::PhaseGrid,
            ExperimentKind::FiniteSize,
            ExperimentKind::Mobility,
            ExperimentKind::Ergodicity,
            ExperimentKind::Transient,
            ExperimentKind::Grw,
        ];
        for kind in kinds {
            let cfg = parse_config("seed = 9", kind).unwrap();
            let doc = cfg.to_document();
            let reparsed = parse_config(&doc, kind).unwrap();
            assert_eq!(cfg, reparsed, "round trip failed for {kind:?}\n{doc}");
        }
    }

    #[test]
    fn overrides_round_trip_exactly() {
        let text = "gamma = 1.1\nmu = 1e-5\nalpha = 0.25\nn_agents = 300\nt_max = 777\nseed = 5\n";
        let cfg = parse_config(text, ExperimentKind::Trajectory).unwrap();
        let reparsed = parse_config(&cfg.to_document(), ExperimentKind::Trajectory).unwrap();
        assert_eq!(cfg, reparsed);
        let RunConfig::Trajectory(c) = cfg else {
            panic!()
        };
        assert_eq!(c.mu, 1e-5);
        assert_eq!(c.t_max, 777);
    }

    #[test]
    fn integer_literals_coerce_to_floats() {
        let cfg = parse_config("mu = 0\nalpha = 0", ExperimentKind::Trajectory).unwrap();
        let RunConfig::Trajectory(c) = cfg else {
            panic!()
        };
        assert_eq!(c.mu, 0.0);
        assert_eq!(c.alpha, 0.0);
    }

    #[test]
    fn transient_gammas_must_stay_below_one() {
        let err = parse_config(
            "gamma_values = [0.5, 0.9, 1.0]",
            ExperimentKind::Transient,
        )
        .unwrap_err();
        assert_eq!(err.key, "gamma_values");
    }
}
