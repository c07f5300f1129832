//! Experiment kinds, registered by name.

mod commutator;
mod full_suite;
mod linear;
mod nonlinear;
mod window;

use std::collections::BTreeMap;

use heatlab::analysis::{fit_power_window, Series};
use heatlab::fields::{FieldConfig, GridSpec};
use heatlab::semigroup::{Propagator, PropagatorConfig, PropagatorRegistry};
use heatlab::semilinear::{Nonlinearity, SolverConfig};
use heatlab::Field;

use crate::artifacts::RunContext;
use crate::config::ExperimentConfig;
use crate::error::{CliResult, HeatContext};

pub use commutator::CommutatorExperiment;
pub use full_suite::FullSuite;
pub use linear::LinearExpansion;
pub use nonlinear::{Approximants, Profiles, Semilinear};
pub use window::WeightedWindow;

/// One experiment kind: validation against the numerical preconditions, then
/// a run that writes artifacts and records checks in the context.
pub trait Experiment: Send + Sync {
    fn kind(&self) -> &'static str;

    fn describe(&self) -> &'static str;

    fn validate(&self, cfg: &ExperimentConfig, registry: &ExperimentRegistry) -> CliResult<()>;

    fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext, registry: &ExperimentRegistry) -> CliResult<()>;
}

pub struct ExperimentRegistry {
    kinds: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn empty() -> Self {
        ExperimentRegistry { kinds: BTreeMap::new() }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(LinearExpansion));
        r.register(Box::new(CommutatorExperiment));
        r.register(Box::new(WeightedWindow));
        r.register(Box::new(Semilinear));
        r.register(Box::new(Approximants));
        r.register(Box::new(Profiles));
        r.register(Box::new(FullSuite));
        r
    }

    pub fn register(&mut self, e: Box<dyn Experiment>) {
        self.kinds.insert(e.kind(), e);
    }

    pub fn get(&self, kind: &str) -> Option<&dyn Experiment> {
        self.kinds.get(kind).map(|b| b.as_ref())
    }

    pub fn kinds(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.kinds.values().map(|b| b.as_ref())
    }

    pub fn lookup(&self, cfg: &ExperimentConfig) -> CliResult<&dyn Experiment> {
        self.get(&cfg.kind).ok_or_else(|| {
            cfg.err(format!(
                "unknown experiment kind (known: {})",
                self.kinds.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn validate(&self, cfg: &ExperimentConfig) -> CliResult<()> {
        self.lookup(cfg)?.validate(cfg, self)
    }

    pub fn run(&self, cfg: &ExperimentConfig, ctx: &mut RunContext) -> CliResult<()> {
        self.lookup(cfg)?.run(cfg, ctx, self)
    }
}

/// Largest grid accepted, in total nodes.
const MAX_GRID_NODES: usize = 1 << 22;

fn default_dx(n: usize) -> f64 {
    if n == 1 {
        0.3
    } else {
        0.5
    }
}

/// Explicit grid if given, else a box sized for horizon `t_hi`.
pub(crate) fn resolve_grid(e: &ExperimentConfig, t_hi: f64) -> CliResult<GridSpec> {
    let g = &e.grid;
    let spec = match (g.half_width, g.points) {
        (Some(l), Some(k)) => GridSpec::new(e.n, l, k).within(&e.name)?,
        (None, None) => SolverConfig::default_grid(e.n, t_hi, g.dx.unwrap_or(default_dx(e.n))).within(&e.name)?,
        _ => return Err(e.err("grid needs both half_width and points, or neither")),
    };
    if let Some(dx) = g.dx {
        if !(dx > 0.0) {
            return Err(e.err(format!("grid dx must be positive, got {dx}")));
        }
    }
    let total = spec.points.checked_pow(spec.n as u32).unwrap_or(usize::MAX);
    if total > MAX_GRID_NODES {
        return Err(e.err(format!(
            "grid of {total} nodes exceeds the limit {MAX_GRID_NODES}; set grid.half_width/points explicitly"
        )));
    }
    Ok(spec)
}

pub(crate) fn field_config(e: &ExperimentConfig) -> FieldConfig {
    let mut cfg = FieldConfig::default();
    if let Some(b) = e.grid.boundary_threshold {
        cfg.boundary_threshold = b;
    }
    cfg
}

pub(crate) fn check_backend(e: &ExperimentConfig) -> CliResult<()> {
    let names = PropagatorRegistry::with_defaults(&PropagatorConfig::default());
    names.get(&e.backend).within(&e.name).map(|_| ())
}

/// The configured propagator; grid-sampling backends get `grid`.
pub(crate) fn propagator(e: &ExperimentConfig, grid: Option<GridSpec>) -> CliResult<Box<dyn Propagator>> {
    let cfg = PropagatorConfig {
        backend: e.backend.clone(),
        grid,
        field: field_config(e),
        padding: e.solver.padding.unwrap_or(1),
        ..PropagatorConfig::default()
    };
    PropagatorRegistry::select(&cfg).within(&e.name)
}

/// Whether the backend needs a grid.
pub(crate) fn uses_grid(e: &ExperimentConfig) -> bool {
    e.backend != "mixture"
}

/// The data family in the representation the backend consumes: grid samples
/// for `spectral`, exact mixtures otherwise.
pub(crate) fn data_fields(e: &ExperimentConfig, grid: Option<&GridSpec>, seed: u64) -> CliResult<Vec<Field>> {
    if e.backend == "spectral" || e.data.is_grid_only() {
        let spec = grid.ok_or_else(|| e.err("this data/backend combination needs a grid"))?;
        return Ok(e.data.grid_fields(spec, seed).into_iter().map(Field::Grid).collect());
    }
    let ms = e
        .data
        .mixtures(e.n, seed)
        .ok_or_else(|| e.err("data kind is grid-only; use backend = \"spectral\""))?;
    Ok(ms.into_iter().map(Field::Mixture).collect())
}

pub(crate) fn solver_config(e: &ExperimentConfig) -> CliResult<SolverConfig> {
    let p = e.require_p()?;
    let t_max = e.t_max.unwrap_or(1e4);
    let nl = Nonlinearity::signed_power(p).within(&e.name)?;
    let grid = resolve_grid(e, t_max)?;
    let mut cfg = SolverConfig::new(nl, grid, t_max);
    let s = &e.solver;
    if let Some(h0) = s.h0 {
        cfg.steps.h0 = h0;
    }
    if let Some(g) = s.growth {
        cfg.steps.growth = g;
    }
    if let Some(f) = s.tail_fraction {
        cfg.tail_fraction = f;
    }
    if let Some(pad) = s.padding {
        cfg.padding = pad;
    }
    if let Some(b) = e.grid.boundary_threshold {
        cfg.boundary_threshold = b;
    }
    cfg.m_track = e.m.unwrap_or(2).max(1);
    cfg.validate().within(&e.name)?;
    Ok(cfg)
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Fitted exponent on `[lo, hi]`, or NaN when the window is too thin.
pub(crate) fn slope(s: &Series, lo: f64, hi: f64) -> f64 {
    fit_power_window(s, lo, hi).map(|f| f.exponent).unwrap_or(f64::NAN)
}

pub(crate) fn check_common(e: &ExperimentConfig, dims: &[usize]) -> CliResult<()> {
    e.check_dim(dims)?;
    e.check_q()?;
    e.check_times()?;
    e.data.validate(e)?;
    check_backend(e)?;
    if let Some(b) = e.grid.boundary_threshold {
        if !(b > 0.0 && b < 1.0) {
            return Err(e.err(format!("boundary_threshold must lie in (0, 1), got {b}")));
        }
    }
    Ok(())
}
