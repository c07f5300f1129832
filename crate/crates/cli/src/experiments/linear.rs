use heatlab::analysis::{build_report, reports_to_csv, Prediction, Run, Series, LINEAR_TOLERANCE};
use heatlab::profiles::{build_expansion, decay_scale, expansion_remainder, expansion_remainder_bound};

use super::{check_common, data_fields, field_config, propagator, resolve_grid, uses_grid, Experiment, ExperimentRegistry};
use crate::artifacts::{q_label, CsvTable, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{CliResult, HeatContext};

/// Hermite expansion of the linear flow: remainder rates against `−(m+1)/2`
/// and the explicit bound. Data outside `L¹₁` get the rate-free convergence
/// check instead.
pub struct LinearExpansion;

fn horizon(e: &ExperimentConfig) -> f64 {
    e.t_max
        .or_else(|| e.times.as_ref().map(|t| t.iter().cloned().fold(0.0, f64::max)))
        .unwrap_or(1e4)
}

fn times(e: &ExperimentConfig) -> Vec<f64> {
    let lo = if e.data.is_grid_only() { 10.0 } else { 1e2 };
    e.times.clone().unwrap_or_else(|| e.log_times(lo, horizon(e)))
}

impl Experiment for LinearExpansion {
    fn kind(&self) -> &'static str {
        "linear-expansion"
    }

    fn describe(&self) -> &'static str {
        "remainder of the order-m Hermite expansion of the heat flow"
    }

    fn validate(&self, e: &ExperimentConfig, _: &ExperimentRegistry) -> CliResult<()> {
        check_common(e, &[1, 2])?;
        let m = e.m.unwrap_or(2);
        if m > 6 {
            return Err(e.err(format!("expansion order m = {m} exceeds 6")));
        }
        if e.data.is_grid_only() {
            if m != 0 {
                return Err(e.err("data without a first moment only admit m = 0"));
            }
            if e.backend != "spectral" {
                return Err(e.err("sampled data need backend = \"spectral\""));
            }
        }
        if uses_grid(e) || e.data.is_grid_only() {
            resolve_grid(e, horizon(e))?;
        }
        Ok(())
    }

    fn run(&self, e: &ExperimentConfig, ctx: &mut RunContext, _: &ExperimentRegistry) -> CliResult<()> {
        let name = e.name.as_str();
        let cfg = field_config(e);
        let ts = times(e);
        let grid = if uses_grid(e) || e.data.is_grid_only() {
            Some(resolve_grid(e, horizon(e))?)
        } else {
            None
        };
        let prop = propagator(e, grid.clone())?;
        let data = data_fields(e, grid.as_ref(), e.seed(ctx.seed))?;
        let rate_free = e.data.is_grid_only();
        let m_max = e.m.unwrap_or(2);
        let n = e.n;

        let mut table = CsvTable::new(&["datum", "m", "q", "t", "scaled_remainder", "scaled_bound"]);
        let mut runs = Vec::new();
        let mut profiles = Vec::new();
        for (d, phi) in data.iter().enumerate() {
            let profile = build_expansion(phi, m_max, &cfg).within(name)?;
            ctx.flag(profile.is_trusted(), format!("datum {d} moments"));
            profiles.push(profile.value);
            for m in 0..=m_max {
                for &q in &e.q {
                    let mut y = Vec::with_capacity(ts.len());
                    let mut worst_excess = f64::NEG_INFINITY;
                    for &t in &ts {
                        let r = expansion_remainder(phi, m, t, q, prop.as_ref(), &cfg).within(name)?;
                        ctx.flag(r.is_trusted(), format!("datum {d} m={m} q={} t={t}", q_label(q)));
                        let scaled = decay_scale(n, q, t) * r.value;
                        let bound = if rate_free {
                            f64::NAN
                        } else {
                            let b = expansion_remainder_bound(phi, m, t, q, &cfg).within(name)?;
                            worst_excess = worst_excess.max(scaled / b.value - 1.0);
                            b.value
                        };
                        table.push(vec![d.into(), m.into(), q_label(q).into(), t.into(), scaled.into(), bound.into()]);
                        y.push(scaled);
                    }
                    let label = format!("d{d}_m{m}_q{}", q_label(q));
                    if rate_free {
                        let monotone = y.windows(2).all(|w| w[1] <= w[0]);
                        let drop = y.last().unwrap() / y[0];
                        ctx.check(
                            format!("monotone {label}"),
                            monotone,
                            format!("scaled remainder nonincreasing on [{}, {}]", ts[0], ts.last().unwrap()),
                        );
                        ctx.check(format!("convergence {label}"), drop < 0.1, format!("final/initial = {drop:.4e}"));
                        ctx.note(&format!("drop_{label}"), drop);
                    } else {
                        ctx.check(
                            format!("bound {label}"),
                            worst_excess <= 1e-6,
                            format!("max remainder/bound - 1 = {worst_excess:.3e}"),
                        );
                        runs.push(Run {
                            series: Series::new(label, ts.clone(), y),
                            prediction: Prediction::Exponent {
                                exponent: -(m as f64 + 1.0) / 2.0,
                            },
                            tolerance: LINEAR_TOLERANCE,
                            window: Some((ts[0], *ts.last().unwrap())),
                        });
                    }
                }
            }
        }
        ctx.write_csv("remainder.csv", &table)?;
        ctx.write_json("expansion.json", &profiles)?;
        if !runs.is_empty() {
            let reports = build_report(&runs);
            for r in &reports {
                ctx.check(
                    format!("rate {}", r.series_id),
                    r.pass,
                    format!("slope {:.4} vs {:.2} (tol {})", r.exponent, r.predicted, r.tolerance),
                );
                ctx.note(&format!("slope_{}", r.series_id), r.exponent);
            }
            crate::artifacts::write_file(&ctx.dir.join("rates.csv"), reports_to_csv(&reports).as_bytes())?;
            ctx.write_json("rates.json", &reports)?;
        }
        Ok(())
    }
}
