use heatlab::analysis::{build_report, predict_regime, reports_to_csv, Prediction, RateReport, Run, NONLINEAR_TOLERANCE};
use heatlab::semilinear::{
    build_approximants, corrected_data, picard_residual, profile_remainder_series, remainder_csv, remainder_series,
    solve, weighted_growth_series, CorrectedData, SolverConfig, Trajectory,
};
use heatlab::MultiIndex;
use serde::Serialize;

use super::{check_common, max_abs, slope, solver_config, Experiment, ExperimentRegistry};
use crate::artifacts::{q_label, write_file, CsvTable, RunContext};
use crate::config::{DataConfig, ExperimentConfig};
use crate::error::{CliResult, HeatContext};

fn check_nonlinear(e: &ExperimentConfig) -> CliResult<SolverConfig> {
    check_common(e, &[1, 2])?;
    if e.backend != "mixture" && e.backend != "spectral" {
        return Err(e.err("nonlinear kinds always integrate on the grid; backend is ignored except mixture/spectral"));
    }
    if let DataConfig::RandomMixture { count, .. } = e.data {
        if count != 1 {
            return Err(e.err("nonlinear kinds solve a single datum; set data.count = 1"));
        }
    }
    solver_config(e)
}

fn trajectory(e: &ExperimentConfig, cfg: &SolverConfig, ctx: &mut RunContext) -> CliResult<Trajectory> {
    let phi = e
        .data
        .grid_fields(&cfg.grid, e.seed(ctx.seed))
        .into_iter()
        .next()
        .ok_or_else(|| e.err("empty data family"))?;
    let traj = solve(&phi, cfg).within(&e.name)?;
    ctx.flag(traj.trust.is_trusted(), "trajectory boundary mass");
    ctx.note("steps", traj.times.len() - 1);
    ctx.note("t_max", traj.final_time());
    ctx.note("grid", &cfg.grid);
    Ok(traj)
}

fn write_rates(ctx: &mut RunContext, reports: &[RateReport]) -> CliResult<()> {
    for r in reports {
        let detail = match &r.error {
            Some(err) => err.clone(),
            None => format!(
                "slope {:.4} on [{:.3e}, {:.3e}], predicted {} (score {:.3}, log model {})",
                r.exponent, r.t_lo, r.t_hi, r.regime, r.selection_score, r.log_selected
            ),
        };
        ctx.check(format!("rate {}", r.series_id), r.pass, detail);
        ctx.note(&format!("slope_{}", r.series_id), r.exponent);
    }
    write_file(&ctx.dir.join("rates.csv"), reports_to_csv(reports).as_bytes())?;
    ctx.write_json("rates.json", &reports)
}

#[derive(Serialize)]
struct CorrectedSummary {
    level: u32,
    mass: f64,
    correction: f64,
    tail: f64,
    tail_ratio: f64,
    tail_exponent: Option<f64>,
}

impl From<&CorrectedData> for CorrectedSummary {
    fn from(d: &CorrectedData) -> Self {
        CorrectedSummary {
            level: d.level,
            mass: d.phi.values().iter().sum::<f64>() * d.phi.spec().cell_volume(),
            correction: d.correction,
            tail: d.tail,
            tail_ratio: d.tail_ratio(),
            tail_exponent: d.tail_exponent,
        }
    }
}

/// Small-data global solution: decay of the scaled norms, weighted-moment
/// growth, and the Picard residual (optionally under step halving).
pub struct Semilinear;

impl Experiment for Semilinear {
    fn kind(&self) -> &'static str {
        "semilinear"
    }

    fn describe(&self) -> &'static str {
        "small-data solution: scaled norms, weighted moments, Picard residual"
    }

    fn validate(&self, e: &ExperimentConfig, _: &ExperimentRegistry) -> CliResult<()> {
        check_nonlinear(e)?;
        if let Some(q) = e.q.iter().find(|&&q| !(q == 1.0 || q == 2.0 || q.is_infinite())) {
            return Err(e.err(format!("semilinear norm series exist for q in {{1, 2, inf}}, got {q}")));
        }
        Ok(())
    }

    fn run(&self, e: &ExperimentConfig, ctx: &mut RunContext, _: &ExperimentRegistry) -> CliResult<()> {
        let name = e.name.as_str();
        let cfg = solver_config(e)?;
        let traj = trajectory(e, &cfg, ctx)?;
        write_file(&ctx.dir.join("trajectory.csv"), traj.to_csv().as_bytes())?;
        let t_end = traj.final_time();
        let late = (t_end / 100.0, t_end);

        let mut decay = CsvTable::new(&["t", "q", "scaled_norm"]);
        for &q in &e.q {
            let s = traj.decay_series(q).within(name)?;
            for (t, y) in s.t.iter().zip(&s.y) {
                decay.push(vec![(*t).into(), q_label(q).into(), (*y).into()]);
            }
            let sup = max_abs(&s.y);
            let k = slope(&s, late.0, late.1);
            ctx.check(
                format!("bounded q={}", q_label(q)),
                sup.is_finite() && k <= 0.05,
                format!("sup {sup:.4e}, initial {:.4e}, late slope {k:.4}", s.y[0]),
            );
            ctx.note(&format!("sup_q{}", q_label(q)), sup);
        }
        ctx.write_csv("decay.csv", &decay)?;

        let mut growth = CsvTable::new(&["t", "m", "moment_sum", "ratio"]);
        for m in 1..=cfg.m_track {
            let (sums, ratio) = weighted_growth_series(&traj, m).within(name)?;
            for k in 0..sums.t.len() {
                growth.push(vec![sums.t[k].into(), m.into(), sums.y[k].into(), ratio.y[k].into()]);
            }
            let g = slope(&sums, late.0, late.1);
            let limit = m as f64 / 2.0 + 0.1;
            ctx.check(
                format!("growth m={m}"),
                g <= limit,
                format!("growth exponent {g:.4} (limit {limit}), ratio sup {:.4e}", max_abs(&ratio.y)),
            );
            ctx.note(&format!("growth_exponent_m{m}"), g);
            ctx.note(&format!("ratio_sup_m{m}"), max_abs(&ratio.y));
        }
        ctx.write_csv("growth.csv", &growth)?;

        let mut picard = CsvTable::new(&["steps", "t", "residual"]);
        let base = picard_residual(&traj).within(name)?;
        for (t, r) in base.t.iter().zip(&base.y) {
            picard.push(vec!["base".into(), (*t).into(), (*r).into()]);
        }
        let base_max = max_abs(&base.y);
        ctx.note("picard_max", base_max);
        if e.solver.refine {
            let mut fine_cfg = cfg.clone();
            fine_cfg.steps = cfg.steps.halved();
            let fine = trajectory(e, &fine_cfg, ctx)?;
            let res = picard_residual(&fine).within(name)?;
            for (t, r) in res.t.iter().zip(&res.y) {
                picard.push(vec!["halved".into(), (*t).into(), (*r).into()]);
            }
            let ratio = base_max / max_abs(&res.y);
            ctx.check(
                "picard order",
                (3.0..=5.0).contains(&ratio),
                format!("max residual ratio under step halving {ratio:.4}"),
            );
            ctx.note("picard_ratio", ratio);
            ctx.note("steps", traj.times.len() - 1);
        }
        ctx.write_csv("picard.csv", &picard)?;
        ctx.note("x_norm_proxy", traj.x_norm_proxy());
        Ok(())
    }
}

/// Corrected approximants `u_N` and the decay regimes of `u − u_N`.
pub struct Approximants;

impl Experiment for Approximants {
    fn kind(&self) -> &'static str {
        "approximants"
    }

    fn describe(&self) -> &'static str {
        "corrected approximants u_N and their remainder regimes"
    }

    fn validate(&self, e: &ExperimentConfig, _: &ExperimentRegistry) -> CliResult<()> {
        check_nonlinear(e)?;
        if e.levels.is_empty() || e.levels.iter().any(|&l| l == 0 || l > 4) {
            return Err(e.err("levels must be a nonempty list drawn from 1..=4"));
        }
        let p = e.require_p()?;
        for &l in &e.levels {
            predict_regime(l, e.n, p).within(&e.name)?;
        }
        Ok(())
    }

    fn run(&self, e: &ExperimentConfig, ctx: &mut RunContext, _: &ExperimentRegistry) -> CliResult<()> {
        let name = e.name.as_str();
        let cfg = solver_config(e)?;
        let traj = trajectory(e, &cfg, ctx)?;
        let top = *e.levels.iter().max().expect("validated nonempty");
        let aps = build_approximants(&traj, top).within(name)?;
        let corrected: Vec<CorrectedSummary> = aps.iter().map(|a| (&a.data).into()).collect();
        ctx.write_json("corrected.json", &corrected)?;
        for c in &corrected {
            ctx.note(&format!("tail_ratio_N{}", c.level), c.tail_ratio);
        }

        let mut series = Vec::new();
        let mut runs = Vec::new();
        for a in aps.iter().filter(|a| e.levels.contains(&a.level)) {
            let regime = predict_regime(a.level, e.n, cfg.nonlinearity.p).within(name)?;
            for &q in &e.q {
                let s = remainder_series(&traj, a, q, None).within(name)?;
                ctx.flag(s.is_trusted(), format!("remainder N={} q={}", a.level, q_label(q)));
                runs.push(Run {
                    series: s.value.clone(),
                    prediction: Prediction::Regime(regime),
                    tolerance: NONLINEAR_TOLERANCE,
                    window: None,
                });
                series.push((a.level, q, s.value));
            }
        }
        let rows: Vec<(u32, f64, &heatlab::analysis::Series)> = series.iter().map(|(l, q, s)| (*l, *q, s)).collect();
        write_file(&ctx.dir.join("remainders.csv"), remainder_csv(&rows).as_bytes())?;
        write_rates(ctx, &build_report(&runs))
    }
}

/// Self-similar profiles `c₀ δ_t G₁` (and the first-moment correction) with
/// coefficients from the first corrected datum.
pub struct Profiles;

#[derive(Serialize)]
struct Coefficients {
    c0: f64,
    c: Vec<f64>,
    corrected: CorrectedSummary,
}

impl Experiment for Profiles {
    fn kind(&self) -> &'static str {
        "profiles"
    }

    fn describe(&self) -> &'static str {
        "self-similar profile remainders from the first corrected datum"
    }

    fn validate(&self, e: &ExperimentConfig, _: &ExperimentRegistry) -> CliResult<()> {
        let cfg = check_nonlinear(e)?;
        let m = e.m.unwrap_or(1);
        if m > 1 {
            return Err(e.err(format!("profile order m must be 0 or 1, got {m}")));
        }
        let p = cfg.nonlinearity.p;
        let need = 1.0 + (3.0 + m as f64) / e.n as f64;
        if !(p > need) {
            return Err(e.err(format!("profile order {m} needs p > {need}, got p = {p}")));
        }
        Ok(())
    }

    fn run(&self, e: &ExperimentConfig, ctx: &mut RunContext, _: &ExperimentRegistry) -> CliResult<()> {
        let name = e.name.as_str();
        let cfg = solver_config(e)?;
        let traj = trajectory(e, &cfg, ctx)?;
        let data = corrected_data(&traj, 1, &[]).within(name)?;
        let vol = data.phi.spec().cell_volume();
        let moment = |a: &MultiIndex| data.phi.signed_moment(a, f64::INFINITY).value;
        let coeffs = Coefficients {
            c0: data.phi.values().iter().sum::<f64>() * vol,
            c: (0..e.n).map(|j| moment(&MultiIndex::unit(e.n, j))).collect(),
            corrected: (&data).into(),
        };
        ctx.note("tail_ratio", data.tail_ratio());
        ctx.check(
            "tail",
            data.tail_ratio() < cfg.tail_fraction,
            format!("tail/correction = {:.3e}", data.tail_ratio()),
        );
        ctx.write_json("coefficients.json", &coeffs)?;

        let mut table = CsvTable::new(&["t", "m", "q", "scaled_remainder"]);
        let mut runs = Vec::new();
        for m in 0..=e.m.unwrap_or(1) {
            for &q in &e.q {
                let s = profile_remainder_series(&traj, &data, m, q, None).within(name)?;
                ctx.flag(s.is_trusted(), format!("profile m={m} q={}", q_label(q)));
                // t = 0 is excluded: the profile is singular there
                let keep: Vec<usize> = (0..s.value.t.len()).filter(|&k| s.value.t[k] > 0.0).collect();
                let series = heatlab::analysis::Series::new(
                    s.value.id.clone(),
                    keep.iter().map(|&k| s.value.t[k]).collect(),
                    keep.iter().map(|&k| s.value.y[k]).collect(),
                );
                for (t, y) in series.t.iter().zip(&series.y) {
                    table.push(vec![(*t).into(), m.into(), q_label(q).into(), (*y).into()]);
                }
                runs.push(Run {
                    series,
                    prediction: Prediction::Exponent {
                        exponent: -(m as f64 + 1.0) / 2.0,
                    },
                    tolerance: if m == 0 { 0.1 } else { 0.15 },
                    window: None,
                });
            }
        }
        ctx.write_csv("profile_remainder.csv", &table)?;
        write_rates(ctx, &build_report(&runs))
    }
}
