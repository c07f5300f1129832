use rayon::prelude::*;

use super::{Experiment, ExperimentRegistry};
use crate::artifacts::RunContext;
use crate::config::{DataConfig, ExperimentConfig};
use crate::data::two_bump;
use crate::error::CliResult;

/// Every other kind at a modest size, each in its own subdirectory. Only the
/// seed of the parent entry is used.
pub struct FullSuite;

fn asym(amplitude: f64) -> DataConfig {
    DataConfig::Asymmetric { amplitude }
}

/// The fixed child configurations.
pub fn children() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();

    let mut c = ExperimentConfig::new("commutator", "commutator");
    c.m = Some(3);
    c.data = DataConfig::RandomMixture {
        count: 2,
        terms: 2,
        amplitude: 1.0,
    };
    out.push(c);

    let mut c = ExperimentConfig::new("linear-expansion", "linear-expansion");
    c.m = Some(2);
    c.q = vec![1.0, 2.0, f64::INFINITY];
    c.data = two_bump();
    out.push(c);

    let mut c = ExperimentConfig::new("heavy-tail", "linear-expansion");
    c.m = Some(0);
    c.q = vec![1.0];
    c.backend = "spectral".into();
    c.data = DataConfig::HeavyTail {
        decay: 1.9,
        amplitude: 1.0,
    };
    c.grid.half_width = Some(4096.0);
    c.grid.points = Some(1 << 15);
    c.grid.boundary_threshold = Some(1e-2);
    out.push(c);

    out.push(ExperimentConfig::new("weighted-window", "weighted-window"));

    let mut c = ExperimentConfig::new("semilinear", "semilinear");
    c.p = Some(4.0);
    c.t_max = Some(1e3);
    c.data = DataConfig::Gaussian {
        amplitude: 0.05,
        scale: 1.0,
        center: None,
    };
    c.solver.refine = true;
    out.push(c);

    let mut c = ExperimentConfig::new("approximants", "approximants");
    c.p = Some(4.0);
    c.t_max = Some(4e4);
    c.levels = vec![1, 2];
    c.data = asym(1.0);
    out.push(c);

    let mut c = ExperimentConfig::new("profiles", "profiles");
    c.p = Some(6.0);
    c.t_max = Some(1e5);
    c.m = Some(1);
    c.q = vec![1.0];
    c.data = asym(0.05);
    out.push(c);

    out
}

impl Experiment for FullSuite {
    fn kind(&self) -> &'static str {
        "full-suite"
    }

    fn describe(&self) -> &'static str {
        "all other kinds at modest sizes, one subdirectory each"
    }

    fn validate(&self, _: &ExperimentConfig, registry: &ExperimentRegistry) -> CliResult<()> {
        for c in children() {
            registry.validate(&c)?;
        }
        Ok(())
    }

    fn run(&self, e: &ExperimentConfig, ctx: &mut RunContext, registry: &ExperimentRegistry) -> CliResult<()> {
        let seed = e.seed(ctx.seed);
        let results: Vec<(RunContext, CliResult<()>)> = children()
            .into_par_iter()
            .map(|c| {
                let mut child = RunContext::new(&c.name, ctx.dir.join(&c.name), seed);
                let r = registry.run(&c, &mut child);
                (child, r)
            })
            .collect();
        let mut first_err = None;
        for (child, r) in results {
            ctx.absorb(child);
            if let Err(err) = r {
                first_err.get_or_insert(err);
            }
        }
        first_err.map_or(Ok(()), Err)
    }
}
