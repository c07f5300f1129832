use heatlab::commutator::{weighted_window_commutator, window_sups_numeric, WeightWindow};

use super::{check_common, data_fields, field_config, propagator, resolve_grid, uses_grid, Experiment, ExperimentRegistry};
use crate::artifacts::{CsvTable, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{CliResult, HeatContext};

/// Commutator of the heat flow with `x_j e^{−ε|x|²}` against its analytic
/// bound, and the window sup-norms by direct maximization.
pub struct WeightedWindow;

fn times(e: &ExperimentConfig) -> Vec<f64> {
    e.times.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0])
}

impl Experiment for WeightedWindow {
    fn kind(&self) -> &'static str {
        "weighted-window"
    }

    fn describe(&self) -> &'static str {
        "windowed weight commutator bound and window sup-norms"
    }

    fn validate(&self, e: &ExperimentConfig, _: &ExperimentRegistry) -> CliResult<()> {
        check_common(e, &[1, 2])?;
        if e.eps.is_empty() {
            return Err(e.err("`eps` list is empty"));
        }
        for &eps in &e.eps {
            WeightWindow::coordinate(0, eps).within(&e.name)?;
        }
        if e.data.is_grid_only() && e.backend != "spectral" {
            return Err(e.err("sampled data need backend = \"spectral\""));
        }
        if uses_grid(e) || e.data.is_grid_only() {
            let hi = times(e).into_iter().fold(0.0, f64::max);
            resolve_grid(e, hi)?;
        }
        Ok(())
    }

    fn run(&self, e: &ExperimentConfig, ctx: &mut RunContext, _: &ExperimentRegistry) -> CliResult<()> {
        let name = e.name.as_str();
        let cfg = field_config(e);
        let ts = times(e);
        let grid = if uses_grid(e) || e.data.is_grid_only() {
            Some(resolve_grid(e, ts.iter().cloned().fold(0.0, f64::max))?)
        } else {
            None
        };
        let prop = propagator(e, grid.clone())?;
        let data = data_fields(e, grid.as_ref(), e.seed(ctx.seed))?;

        let mut table = CsvTable::new(&["datum", "axis", "eps", "t", "value", "bound", "pass"]);
        let mut sups = CsvTable::new(&["axis", "eps", "grad_closed_form", "grad_numeric", "lap_closed_form", "lap_numeric"]);
        let (mut all_below, mut worst_gap) = (true, 0.0f64);
        for axis in 0..e.n {
            for &eps in &e.eps {
                let w = WeightWindow::coordinate(axis, eps).within(name)?;
                let (g, l) = (w.grad_sup(e.n), w.laplacian_sup(e.n));
                let (gn, ln) = window_sups_numeric(&w, e.n);
                worst_gap = worst_gap.max((g - gn).abs()).max((l - ln).abs());
                sups.push(vec![axis.into(), eps.into(), g.into(), gn.into(), l.into(), ln.into()]);
                for (d, phi) in data.iter().enumerate() {
                    for &t in &ts {
                        let c = weighted_window_commutator(phi, &w, t, prop.as_ref(), &cfg).within(name)?;
                        ctx.flag(c.trusted, format!("datum {d} axis {axis} eps {eps} t={t}"));
                        let pass = c.value <= c.bound;
                        all_below &= pass;
                        table.push(vec![d.into(), axis.into(), eps.into(), t.into(), c.value.into(), c.bound.into(), pass.into()]);
                    }
                }
            }
        }
        ctx.write_csv("window.csv", &table)?;
        ctx.write_csv("sups.csv", &sups)?;
        ctx.check("window bound", all_below, format!("{} (eps, t) pairs", table.len()));
        ctx.check("window sup norms", worst_gap <= 1e-10, format!("max |closed form - numeric| = {worst_gap:.3e}"));
        ctx.note("max_sup_gap", worst_gap);
        Ok(())
    }
}
