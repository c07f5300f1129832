//! Decay-rate fits on log-log axes, log-corrected model selection and the
//! predicted remainder regimes of the corrected approximants.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};

/// Minimum number of samples inside a fit window.
pub const MIN_SAMPLES: usize = 8;
/// The log model is selected when its residual is at most this fraction of the power-law residual.
pub const LOG_SELECTION_THRESHOLD: f64 = 0.5;
/// `|Nσ − 1|` below this is treated as the critical (logarithmic) case.
pub const KNIFE_EDGE: f64 = 1e-9;
pub const NONLINEAR_TOLERANCE: f64 = 0.1;
pub const LINEAR_TOLERANCE: f64 = 0.05;

/// A named time series `(t_k, y_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub id: String,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(id: impl Into<String>, t: Vec<f64>, y: Vec<f64>) -> Self {
        Series { id: id.into(), t, y }
    }

    /// Samples with `lo ≤ t ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.t
            .iter()
            .zip(&self.y)
            .filter(|(t, _)| **t >= lo && **t <= hi)
            .map(|(t, y)| (*t, *y))
            .unzip()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub stderr: f64,
    /// `log C` in `y ≈ C t^a`.
    pub log_prefactor: f64,
    /// Sum of squared residuals in `log y`.
    pub residual: f64,
    pub samples: usize,
}

fn log_samples(t: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if t.len() != y.len() {
        return Err(HeatError::InvalidArgument("series lengths differ".into()));
    }
    if t.len() < MIN_SAMPLES {
        return Err(HeatError::InsufficientData {
            need: MIN_SAMPLES,
            got: t.len(),
        });
    }
    for (&tk, &yk) in t.iter().zip(y) {
        if !(tk > 0.0) {
            return Err(HeatError::InvalidArgument(format!("fit times must be positive, got {tk}")));
        }
        if !(yk > 0.0 && yk.is_finite()) {
            return Err(HeatError::NonPositiveSample { t: tk, value: yk });
        }
    }
    Ok((t.iter().map(|v| v.ln()).collect(), y.iter().map(|v| v.ln()).collect()))
}

/// Least-squares slope of `log y` against `log t`.
pub fn fit_power(t: &[f64], y: &[f64]) -> Result<PowerFit> {
    let (lx, ly) = log_samples(t, y)?;
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HeatError::InvalidArgument("fit window has a single distinct time".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (residual / (k - 2.0) / sxx).sqrt();
    Ok(PowerFit {
        exponent: slope,
        stderr,
        log_prefactor: intercept,
        residual,
        samples: lx.len(),
    })
}

/// `fit_power` restricted to `lo ≤ t ≤ hi`.
pub fn fit_power_window(series: &Series, lo: f64, hi: f64) -> Result<PowerFit> {
    let (t, y) = series.window(lo, hi);
    fit_power(&t, &y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    Power,
    PowerTimesLog,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub model: DecayModel,
    /// Residual of the log model over the residual of the free power law.
    pub score: f64,
    pub power: PowerFit,
    pub log_residual: f64,
}

/// Compare `y ≈ C t^a` with `y ≈ C t^{−1} log(1+t)` by residuals in `log y`.
pub fn fit_log_corrected(t: &[f64], y: &[f64]) -> Result<ModelSelection> {
    let power = fit_power(t, y)?;
    let (_, ly) = log_samples(t, y)?;
    let shape: Vec<f64> = t.iter().map(|&tk| (tk.ln_1p() / tk).ln()).collect();
    let k = ly.len() as f64;
    let offset = ly.iter().zip(&shape).map(|(a, b)| a - b).sum::<f64>() / k;
    let log_residual: f64 = ly
        .iter()
        .zip(&shape)
        .map(|(a, b)| (a - b - offset).powi(2))
        .sum();
    let score = if power.residual > 0.0 {
        log_residual / power.residual
    } else if log_residual > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let model = if score <= LOG_SELECTION_THRESHOLD {
        DecayModel::PowerTimesLog
    } else {
        DecayModel::Power
    };
    Ok(ModelSelection {
        model,
        score,
        power,
        log_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RegimeForm {
    /// `t^{−Nσ}`.
    PowerNSigma { exponent: f64 },
    /// `t^{−1} log(1+t)`.
    PowerTimesLog,
    /// `t^{−1}`.
    InverseT,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegime {
    pub form: RegimeForm,
    pub level: u32,
    pub n: usize,
    pub p: f64,
    pub sigma: f64,
}

impl RateRegime {
    /// Exponent of the leading power (`−1` for both critical and supercritical cases).
    pub fn predicted_exponent(&self) -> f64 {
        match self.form {
            RegimeForm::PowerNSigma { exponent } => exponent,
            RegimeForm::PowerTimesLog | RegimeForm::InverseT => -1.0,
        }
    }

    pub fn label(&self) -> String {
        match self.form {
            RegimeForm::PowerNSigma { exponent } => format!("t^{exponent}"),
            RegimeForm::PowerTimesLog => "t^-1 log(1+t)".into(),
            RegimeForm::InverseT => "t^-1".into(),
        }
    }
}

/// `p_F(n) = 1 + 2/n`.
pub fn fujita_exponent(n: usize) -> f64 {
    1.0 + 2.0 / n as f64
}

/// `σ = (n/2)(p − 1) − 1`.
pub fn sigma(n: usize, p: f64) -> f64 {
    n as f64 / 2.0 * (p - 1.0) - 1.0
}

/// Predicted decay of `u − u_N` from `Nσ`.
pub fn predict_regime(level: u32, n: usize, p: f64) -> Result<RateRegime> {
    if n == 0 {
        return Err(HeatError::InvalidArgument("dimension must be positive".into()));
    }
    if level == 0 {
        return Err(HeatError::InvalidArgument("approximant level must be at least 1".into()));
    }
    let pf = fujita_exponent(n);
    if !(p > pf) {
        return Err(HeatError::SubcriticalExponent { n, p, p_fujita: pf });
    }
    let s = sigma(n, p);
    let ns = level as f64 * s;
    let form = if (ns - 1.0).abs() < KNIFE_EDGE {
        RegimeForm::PowerTimesLog
    } else if ns < 1.0 {
        RegimeForm::PowerNSigma { exponent: -ns }
    } else {
        RegimeForm::InverseT
    };
    Ok(RateRegime {
        form,
        level,
        n,
        p,
        sigma: s,
    })
}

/// Default fit window: from `4·2^{N−1}` (exclusive) to the last sample.
pub fn default_window(t: &[f64], level: u32) -> Option<(f64, f64)> {
    let hi = t.iter().cloned().fold(f64::NAN, f64::max);
    if !(hi > 0.0) {
        return None;
    }
    let start = 4.0 * 2f64.powi(level as i32 - 1);
    let lo = start * (1.0 + 1e-12);
    (lo < hi).then_some((lo, hi))
}

/// What a series is expected to do.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prediction {
    /// A pure power with the given exponent.
    Exponent { exponent: f64 },
    Regime(RateRegime),
}

/// A series with its prediction, tolerance and optional explicit window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub series: Series,
    pub prediction: Prediction,
    pub tolerance: f64,
    pub window: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub series_id: String,
    pub t_lo: f64,
    pub t_hi: f64,
    pub exponent: f64,
    pub stderr: f64,
    pub log_selected: bool,
    pub selection_score: f64,
    pub predicted: f64,
    pub regime: String,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

fn report_for(run: &Run) -> RateReport {
    let level = match &run.prediction {
        Prediction::Regime(r) => r.level,
        Prediction::Exponent { .. } => 1,
    };
    let (predicted, regime, is_log) = match &run.prediction {
        Prediction::Exponent { exponent } => (*exponent, format!("t^{exponent}"), false),
        Prediction::Regime(r) => (
            r.predicted_exponent(),
            r.label(),
            matches!(r.form, RegimeForm::PowerTimesLog),
        ),
    };
    let mut rep = RateReport {
        series_id: run.series.id.clone(),
        t_lo: f64::NAN,
        t_hi: f64::NAN,
        exponent: f64::NAN,
        stderr: f64::NAN,
        log_selected: false,
        selection_score: f64::NAN,
        predicted,
        regime,
        tolerance: run.tolerance,
        pass: false,
        error: None,
    };
    let Some((lo, hi)) = run.window.or_else(|| default_window(&run.series.t, level)) else {
        rep.error = Some("no usable fit window".into());
        return rep;
    };
    rep.t_lo = lo;
    rep.t_hi = hi;
    let (t, y) = run.series.window(lo, hi);
    match fit_log_corrected(&t, &y) {
        Ok(sel) => {
            rep.exponent = sel.power.exponent;
            rep.stderr = sel.power.stderr;
            rep.log_selected = sel.model == DecayModel::PowerTimesLog;
            rep.selection_score = sel.score;
            rep.pass = if is_log {
                rep.log_selected
            } else {
                (sel.power.exponent - predicted).abs() <= run.tolerance
            };
        }
        Err(e) => rep.error = Some(e.to_string()),
    }
    rep
}

/// One report per run.
pub fn build_report(runs: &[Run]) -> Vec<RateReport> {
    runs.iter().map(report_for).collect()
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        String::new()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `series_id,exponent,stderr,predicted,regime,pass`.
pub fn reports_to_csv(reports: &[RateReport]) -> String {
    let mut out = String::from("series_id,exponent,stderr,predicted,regime,pass\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.series_id),
            csv_number(r.exponent),
            csv_number(r.stderr),
            csv_number(r.predicted),
            csv_field(&r.regime),
            r.pass
        );
    }
    out
}
