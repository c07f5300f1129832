use heatlab::analysis::Series;
use heatlab::commutator::{build_r_alpha, commutator_moment_estimate, identity_residual, weighted_flow_estimate, EstimateReport};
use heatlab::fields::GridSpec;
use heatlab::{Field, MultiIndex};

use super::{
    check_common, data_fields, field_config, propagator, resolve_grid, slope, uses_grid, Experiment, ExperimentRegistry,
};
use crate::artifacts::{index_label, num, CsvTable, RunContext};
use crate::config::ExperimentConfig;
use crate::error::{CliResult, HeatContext};

/// Commutator identity residuals, the symbolic expansions, and empirical
/// constants of the two weighted estimates.
pub struct CommutatorExperiment;

const ESTIMATES: [&str; 2] = ["commutator", "weighted_flow"];
/// A ratio that stays bounded flattens at both ends of the time grid; this caps
/// the log-log slope of its envelope over the first and last two decades.
const END_SLOPE: f64 = 0.1;

fn estimate_horizon(e: &ExperimentConfig) -> f64 {
    e.t_max.unwrap_or(1e4)
}

fn identity_times(e: &ExperimentConfig) -> Vec<f64> {
    e.times.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0])
}

fn tolerance(e: &ExperimentConfig) -> f64 {
    if e.backend == "mixture" {
        1e-8
    } else {
        1e-6
    }
}

type Constants = Vec<(&'static str, u32, f64, Vec<EstimateReport>)>;

fn estimates(
    e: &ExperimentConfig,
    data: &[Field],
    ts: &[f64],
    grid: Option<GridSpec>,
    m_max: u32,
) -> CliResult<Constants> {
    let cfg = field_config(e);
    let prop = propagator(e, grid)?;
    let mut out = Vec::new();
    for kind in ESTIMATES {
        for m in 1..=m_max {
            let mut reports = Vec::new();
            for phi in data {
                let r = if kind == "commutator" {
                    commutator_moment_estimate(phi, m, ts, prop.as_ref(), &cfg)
                } else {
                    weighted_flow_estimate(phi, m, ts, prop.as_ref(), &cfg)
                }
                .within(&e.name)?;
                reports.push(r);
            }
            let c = reports.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
            out.push((kind, m, c, reports));
        }
    }
    Ok(out)
}

impl Experiment for CommutatorExperiment {
    fn kind(&self) -> &'static str {
        "commutator"
    }

    fn describe(&self) -> &'static str {
        "x^α e^{tΔ} − e^{tΔ} x^α against its expansion, plus weighted estimate constants"
    }

    fn validate(&self, e: &ExperimentConfig, _: &ExperimentRegistry) -> CliResult<()> {
        check_common(e, &[1, 2])?;
        if e.data.is_grid_only() {
            return Err(e.err("commutator checks need data with all moments; heavy-tail is not allowed"));
        }
        let m = e.m.unwrap_or(4);
        if m == 0 || m > 6 {
            return Err(e.err(format!("|α| bound m must lie in 1..=6, got {m}")));
        }
        if uses_grid(e) {
            resolve_grid(e, estimate_horizon(e))?;
        }
        if e.solver.refine && e.backend != "spectral" {
            return Err(e.err("solver.refine (grid doubling) needs backend = \"spectral\""));
        }
        Ok(())
    }

    fn run(&self, e: &ExperimentConfig, ctx: &mut RunContext, _: &ExperimentRegistry) -> CliResult<()> {
        let name = e.name.as_str();
        let cfg = field_config(e);
        let m = e.m.unwrap_or(4);
        let seed = e.seed(ctx.seed);
        let grid = if uses_grid(e) {
            Some(resolve_grid(e, estimate_horizon(e))?)
        } else {
            None
        };
        let prop = propagator(e, grid.clone())?;
        let data = data_fields(e, grid.as_ref(), seed)?;
        let alphas: Vec<MultiIndex> = MultiIndex::up_to(e.n, m).into_iter().filter(|a| !a.is_zero()).collect();

        let mut expansions = Vec::new();
        let mut classes_ok = true;
        for a in &alphas {
            let r = build_r_alpha(a).within(name)?;
            classes_ok &= r.check_classes().is_ok();
            expansions.push(r);
        }
        ctx.check("term classes", classes_ok, format!("{} expansions checked", expansions.len()));
        ctx.write_json("expansions.json", &expansions)?;

        let tol = tolerance(e);
        let mut table = CsvTable::new(&["datum", "alpha", "t", "residual", "trusted"]);
        let mut worst: f64 = 0.0;
        for (d, phi) in data.iter().enumerate() {
            for a in &alphas {
                for &t in &identity_times(e) {
                    let r = identity_residual(phi, a, t, prop.as_ref(), &cfg).within(name)?;
                    ctx.flag(r.is_trusted(), format!("identity datum {d} alpha {a} t={t}"));
                    worst = worst.max(r.value);
                    table.push(vec![d.into(), index_label(a).into(), t.into(), r.value.into(), r.is_trusted().into()]);
                }
            }
        }
        ctx.write_csv("residuals.csv", &table)?;
        ctx.note("max_residual", worst);
        ctx.check("identity", worst <= tol, format!("max relative residual {} (tol {tol:e})", num(worst)));

        let m_est = m.min(3);
        let ts = e.log_times(1e-2, estimate_horizon(e));
        let consts = estimates(e, &data, &ts, grid.clone(), m_est)?;
        let refined = match (&grid, e.solver.refine) {
            (Some(g), true) => {
                let fine = g.refined();
                let fine_data = data_fields(e, Some(&fine), seed)?;
                Some(estimates(e, &fine_data, &ts, Some(fine), m_est)?)
            }
            _ => None,
        };

        let mut rows = CsvTable::new(&["estimate", "m", "datum", "t", "lhs", "rhs", "ratio"]);
        let mut ctable = CsvTable::new(&["estimate", "m", "constant", "refined_constant", "relative_change"]);
        for (i, (kind, mm, c, reports)) in consts.iter().enumerate() {
            let mut envelope = vec![0.0f64; ts.len()];
            for (d, r) in reports.iter().enumerate() {
                ctx.flag(r.trusted, format!("{kind} estimate m={mm} datum {d}"));
                for (k, row) in r.rows.iter().enumerate() {
                    envelope[k] = envelope[k].max(row.ratio);
                    rows.push(vec![(*kind).into(), (*mm).into(), d.into(), row.t.into(), row.lhs.into(), row.rhs.into(), row.ratio.into()]);
                }
            }
            let s = Series::new(format!("{kind}_m{mm}"), ts.clone(), envelope);
            let (t0, t1) = (ts[0], *ts.last().unwrap());
            let early = slope(&s, t0, 100.0 * t0);
            let late = slope(&s, t1 / 100.0, t1);
            let bounded = c.is_finite() && early >= -END_SLOPE && late <= END_SLOPE;
            ctx.check(
                format!("bounded {kind} m={mm}"),
                bounded,
                format!("C = {c:.4e}, end slopes {early:.3} / {late:.3}"),
            );
            ctx.note(&format!("constant_{kind}_m{mm}"), c);
            let (fine_c, change) = match &refined {
                Some(r) => {
                    let fc = r[i].2;
                    let change = (fc - c).abs() / c.abs();
                    ctx.check(
                        format!("resolution {kind} m={mm}"),
                        change < 0.1,
                        format!("C changes by {change:.3e} under grid doubling"),
                    );
                    (fc, change)
                }
                None => (f64::NAN, f64::NAN),
            };
            ctable.push(vec![(*kind).into(), (*mm).into(), (*c).into(), fine_c.into(), change.into()]);
        }
        ctx.write_csv("estimates.csv", &rows)?;
        ctx.write_csv("constants.csv", &ctable)?;
        Ok(())
    }
}
