//! Experiment configuration files (TOML).
//!
//! A file holds a suite seed, an output directory and a list of
//! `[[experiment]]` tables. Every field has a default; see
//! [`REFERENCE_CONFIG`] for the documented layout.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Reference configuration with every field and its default.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/reference.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("heatlab-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: String,
    #[serde(default = "one")]
    pub n: usize,
    /// Nonlinearity exponent (semilinear kinds).
    #[serde(default)]
    pub p: Option<f64>,
    /// Approximant levels `N`.
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    /// Largest order: expansion order, `|α|`, or profile order depending on the kind.
    #[serde(default)]
    pub m: Option<u32>,
    #[serde(default = "default_q")]
    pub q: Vec<f64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Explicit evaluation times; kinds that fit rates use a log-spaced grid instead.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Samples per decade for log-spaced time grids.
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
    /// Window widths for the weighted-window kind.
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_backend")]
    pub backend: String,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub solver: SolverOverrides,
    /// Overrides the suite seed for this experiment.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one() -> usize {
    1
}

fn default_levels() -> Vec<u32> {
    vec![1]
}

fn default_q() -> Vec<f64> {
    vec![1.0, f64::INFINITY]
}

fn default_per_decade() -> usize {
    10
}

fn default_eps() -> Vec<f64> {
    vec![1.0, 0.1, 0.01]
}

fn default_backend() -> String {
    "mixture".into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: Option<f64>,
    pub points: Option<usize>,
    /// Target spacing when the box is sized from `t_max`.
    pub dx: Option<f64>,
    /// Fraction of mass in the outer shell above which grid results are untrusted.
    pub boundary_threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    /// `amplitude · G_scale(x − center)`.
    Gaussian {
        #[serde(default = "unit")]
        amplitude: f64,
        #[serde(default = "unit")]
        scale: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `amplitude · (0.6 G₁(x − a) + 0.4 G_{1/2}(x − b))`.
    Asymmetric {
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// `count` seeded random Gaussian mixtures with `terms` bumps each.
    RandomMixture {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_terms")]
        terms: usize,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// Explicit bumps `Σ weight · G_scale(x − center)`, times `amplitude`.
    Mixture {
        terms: Vec<BumpConfig>,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// `amplitude · (1 + |x|²)^{−decay/2}` sampled on the grid.
    HeavyTail {
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub weight: f64,
    #[serde(default = "unit")]
    pub scale: f64,
    pub center: Vec<f64>,
}

fn unit() -> f64 {
    1.0
}

fn default_count() -> usize {
    5
}

fn default_terms() -> usize {
    2
}

fn default_decay() -> f64 {
    1.9
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Asymmetric { amplitude: 1.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub h0: Option<f64>,
    pub growth: Option<f64>,
    pub tail_fraction: Option<f64>,
    pub padding: Option<usize>,
    /// Also solve with halved steps and report the Picard residual ratio.
    #[serde(default)]
    pub refine: bool,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> CliResult<SuiteConfig> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<SuiteConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks that do not depend on the experiment kind.
    pub fn check_names(&self) -> CliResult<()> {
        let mut seen = BTreeSet::new();
        for e in &self.experiments {
            if e.name.is_empty() || !e.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(CliError::Config(format!(
                    "experiment name `{}` must be nonempty and use only [A-Za-z0-9_-]",
                    e.name
                )));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(CliError::Config(format!("duplicate experiment name `{}`", e.name)));
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Minimal entry of the given kind; used by composite experiments.
    pub fn new(name: &str, kind: &str) -> ExperimentConfig {
        ExperimentConfig {
            name: name.into(),
            kind: kind.into(),
            n: 1,
            p: None,
            levels: default_levels(),
            m: None,
            q: default_q(),
            grid: GridConfig::default(),
            t_max: None,
            times: None,
            per_decade: default_per_decade(),
            eps: default_eps(),
            backend: default_backend(),
            data: DataConfig::default(),
            solver: SolverOverrides::default(),
            seed: None,
        }
    }

    pub fn err(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("experiment `{}` ({}): {msg}", self.name, self.kind))
    }

    pub fn require_p(&self) -> CliResult<f64> {
        self.p.ok_or_else(|| self.err("missing exponent `p`"))
    }

    pub fn check_q(&self) -> CliResult<()> {
        if self.q.is_empty() {
            return Err(self.err("`q` list is empty"));
        }
        if let Some(q) = self.q.iter().find(|q| !(**q >= 1.0)) {
            return Err(self.err(format!("q must be >= 1, got {q}")));
        }
        Ok(())
    }

    pub fn check_dim(&self, allowed: &[usize]) -> CliResult<()> {
        if allowed.contains(&self.n) {
            Ok(())
        } else {
            Err(self.err(format!("dimension n = {} not supported here (allowed: {allowed:?})", self.n)))
        }
    }

    pub fn check_times(&self) -> CliResult<()> {
        if let Some(ts) = &self.times {
            if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(self.err("`times` must be a nonempty list of positive numbers"));
            }
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(self.err(format!("t_max must be positive, got {t}")));
            }
        }
        if self.per_decade < 2 {
            return Err(self.err("per_decade must be at least 2"));
        }
        Ok(())
    }

    pub fn seed(&self, suite_seed: u64) -> u64 {
        self.seed.unwrap_or(suite_seed)
    }

    /// Log-spaced times from `lo` to `hi` with `per_decade` samples per decade.
    pub fn log_times(&self, lo: f64, hi: f64) -> Vec<f64> {
        let decades = (hi / lo).log10();
        let k = ((decades * self.per_decade as f64).round() as usize).max(1);
        (0..=k)
            .map(|i| lo * 10f64.powf(decades * i as f64 / k as f64))
            .collect()
    }
}
