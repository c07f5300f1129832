//! Small-data solutions of `∂_t u − Δu = f(u)` through the Duhamel form
//!
//! ```text
//! u(t) = e^{tΔ}φ + ∫₀^t e^{(t−s)Δ} f(u(s)) ds
//! ```
//!
//! on a periodic grid, together with the corrected data
//! `φ_N = φ + ∫₀^∞ (f(u) − f(u_{N−1})) ds`, the approximants
//! `u_N(t) = e^{tΔ}φ_N + ∫₀^t e^{(t−s)Δ} f(u_{N−1}(s)) ds` and the remainder
//! series used for rate fitting.
//!
//! Time stepping is a Lawson (integrating-factor) trapezoid rule: with
//! `E = e^{hΔ}` applied exactly in Fourier space,
//!
//! ```text
//! v       = E(u_k + h f(u_k))
//! u_{k+1} = E(u_k + h/2 f(u_k)) + h/2 f(v)
//! ```
//!
//! Steps grow like `h = h₀(1 + g t)`, capped at `h_max`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_power_window, fujita_exponent, sigma, Series};
use crate::error::{HeatError, Result};
use crate::fields::{Field, FieldConfig, Flagged, GridField, GridSpec, SpectralPlan, Trust, DEFAULT_BOUNDARY_THRESHOLD};
use crate::multi_index::MultiIndex;
use crate::profiles::{build_expansion, decay_scale, eval_expansion};
use crate::quadrature::{GL3_NODES, GL3_WEIGHTS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearForm {
    /// `ξ^p` for integer `p`; `sign(ξ)|ξ|^p` otherwise.
    Power,
    /// `|ξ|^p`.
    AbsPower,
    /// `|ξ|^{p−1} ξ`.
    SignedPower,
}

/// `f(ξ) = sign · form(ξ)`; `sign = 0` gives `f ≡ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub p: f64,
    pub form: NonlinearForm,
    pub sign: f64,
}

impl Nonlinearity {
    pub fn new(p: f64, form: NonlinearForm, sign: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(HeatError::InvalidArgument(format!("exponent p must exceed 1, got {p}")));
        }
        if !(sign == 1.0 || sign == -1.0 || sign == 0.0) {
            return Err(HeatError::InvalidArgument(format!("sign must be -1, 0 or 1, got {sign}")));
        }
        Ok(Nonlinearity { p, form, sign })
    }

    /// `|ξ|^{p−1}ξ` with the given exponent.
    pub fn signed_power(p: f64) -> Result<Self> {
        Self::new(p, NonlinearForm::SignedPower, 1.0)
    }

    /// `f ≡ 0` (the linear heat equation).
    pub fn zero() -> Self {
        Nonlinearity {
            p: 2.0,
            form: NonlinearForm::SignedPower,
            sign: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0.0
    }

    pub fn eval(&self, xi: f64) -> f64 {
        if self.sign == 0.0 || xi == 0.0 {
            return 0.0;
        }
        let a = xi.abs().powf(self.p);
        let v = match self.form {
            NonlinearForm::AbsPower => a,
            NonlinearForm::SignedPower => a.copysign(xi),
            NonlinearForm::Power => {
                if self.p.fract() == 0.0 && (self.p as i64) % 2 == 0 {
                    a
                } else {
                    a.copysign(xi)
                }
            }
        };
        self.sign * v
    }

    /// Reported constant `K` in `|f(ξ)−f(η)| ≤ K(|ξ|^{p−1}+|η|^{p−1})|ξ−η|`.
    pub fn lipschitz_constant(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.p
        }
    }

    /// Largest observed `|f(ξ)−f(η)| / ((|ξ|^{p−1}+|η|^{p−1})|ξ−η|)` over the pairs.
    pub fn lipschitz_ratio(&self, pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
        pairs
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| {
                let den = (a.abs().powf(self.p - 1.0) + b.abs().powf(self.p - 1.0)) * (a - b).abs();
                (self.eval(a) - self.eval(b)).abs() / den
            })
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, g: &GridField) -> GridField {
        g.map(|v| self.eval(v))
    }
}

/// `f(field)` pointwise.
pub fn apply_f(field: &GridField, nl: &Nonlinearity) -> GridField {
    nl.apply(field)
}

/// `f(u)` evaluated on a grid refined `factor` times by Fourier interpolation,
/// then projected back onto the original modes.
pub fn apply_f_oversampled(u: &GridField, nl: &Nonlinearity, factor: usize) -> GridField {
    if factor <= 1 || nl.is_zero() {
        return nl.apply(u);
    }
    let spec = u.spec();
    let np = spec.points;
    let big = np * factor;
    let mut planner = FftPlanner::<f64>::new();
    let (fs, fb) = (planner.plan_fft_forward(np), planner.plan_fft_forward(big));
    let (is, ib) = (planner.plan_fft_inverse(np), planner.plan_fft_inverse(big));
    // map a small-grid mode to its slot on the big grid; the Nyquist mode is dropped
    let slot = |k: usize| -> Option<usize> {
        if k < np / 2 {
            Some(k)
        } else if k > np / 2 {
            Some(big - (np - k))
        } else {
            None
        }
    };
    let transform2 = |buf: &mut [Complex64], n: usize, fft: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        fft.process(buf);
        if spec.n == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = buf[r * n + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    buf[r * n + c] = col[r];
                }
            }
        }
    };
    let mut small: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform2(&mut small, np, &fs);
    let big_len = big.pow(spec.n as u32);
    let mut wide = vec![Complex64::new(0.0, 0.0); big_len];
    let idx = |r: usize, c: usize, n: usize| if spec.n == 1 { c } else { r * n + c };
    let rows = if spec.n == 1 { 1 } else { np };
    for r in 0..rows {
        for c in 0..np {
            let (Some(bc), br) = (slot(c), if spec.n == 1 { Some(0) } else { slot(r) }) else {
                continue;
            };
            let Some(br) = br else { continue };
            wide[idx(br, bc, big)] = small[idx(r, c, np)];
        }
    }
    transform2(&mut wide, big, &ib);
    let scale = 1.0 / (np.pow(spec.n as u32)) as f64;
    for w in wide.iter_mut() {
        *w = Complex64::new(nl.eval(w.re * scale), 0.0);
    }
    transform2(&mut wide, big, &fb);
    let mut back = vec![Complex64::new(0.0, 0.0); spec.len()];
    for r in 0..rows {
        for c in 0..np {
            let (Some(bc), br) = (slot(c), if spec.n == 1 { Some(0) } else { slot(r) }) else {
                continue;
            };
            let Some(br) = br else { continue };
            back[idx(r, c, np)] = wide[idx(br, bc, big)];
        }
    }
    transform2(&mut back, np, &is);
    let norm = 1.0 / big_len as f64;
    let vals = back.iter().map(|b| b.re * norm).collect();
    GridField::new(spec.clone(), vals).expect("finite oversampled nonlinearity")
}

/// Step sizes `h(t) = min(h₀(1 + growth·t), h_max)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub h0: f64,
    pub growth: f64,
    pub h_max: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            h0: 0.02,
            growth: 1.0,
            h_max: f64::INFINITY,
        }
    }
}

impl StepControl {
    pub fn step(&self, t: f64) -> f64 {
        (self.h0 * (1.0 + self.growth * t)).min(self.h_max)
    }

    /// Every step halved.
    pub fn halved(&self) -> StepControl {
        StepControl {
            h0: self.h0 / 2.0,
            growth: self.growth,
            h_max: self.h_max / 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub nonlinearity: Nonlinearity,
    /// Multiplies the initial datum before solving.
    pub amplitude: f64,
    pub grid: GridSpec,
    pub t_max: f64,
    pub steps: StepControl,
    /// Oversampling factor for evaluating `f` (1 = pointwise on the grid).
    pub padding: usize,
    /// `(1+t)^{n/2}‖u‖_∞` may not exceed this multiple of its initial value.
    pub guard_factor: f64,
    /// Upper bound on `‖φ‖₁ + ‖φ‖_∞` after amplitude scaling.
    pub smallness_budget: f64,
    /// Require `p > p_F(n)`.
    pub require_supercritical: bool,
    /// Weighted moments `‖x^α u‖₁` are tracked for `1 ≤ |α| ≤ m_track`.
    pub m_track: u32,
    /// Refuse corrected data whose tail exceeds this fraction of the correction.
    pub tail_fraction: f64,
    pub boundary_threshold: f64,
}

impl SolverConfig {
    pub fn new(nonlinearity: Nonlinearity, grid: GridSpec, t_max: f64) -> Self {
        SolverConfig {
            nonlinearity,
            amplitude: 1.0,
            grid,
            t_max,
            steps: StepControl::default(),
            padding: 1,
            guard_factor: 10.0,
            smallness_budget: 2.0,
            require_supercritical: true,
            m_track: 2,
            tail_fraction: 0.01,
            boundary_threshold: DEFAULT_BOUNDARY_THRESHOLD,
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn fujita(&self) -> f64 {
        fujita_exponent(self.n())
    }

    pub fn sigma(&self) -> f64 {
        sigma(self.n(), self.nonlinearity.p)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(HeatError::InvalidArgument(format!("t_max must be positive, got {}", self.t_max)));
        }
        let s = &self.steps;
        if !(s.h0 > 0.0 && s.growth >= 0.0 && s.h_max > 0.0) {
            return Err(HeatError::InvalidArgument("step control must be positive".into()));
        }
        if self.padding == 0 || !self.padding.is_power_of_two() {
            return Err(HeatError::InvalidArgument("padding must be a power of two >= 1".into()));
        }
        if !(self.guard_factor > 1.0) {
            return Err(HeatError::InvalidArgument("guard factor must exceed 1".into()));
        }
        if !(self.tail_fraction > 0.0) {
            return Err(HeatError::InvalidArgument("tail fraction must be positive".into()));
        }
        let p = self.nonlinearity.p;
        if self.require_supercritical && !self.nonlinearity.is_zero() && !(p > self.fujita()) {
            return Err(HeatError::SubcriticalExponent {
                n: self.n(),
                p,
                p_fujita: self.fujita(),
            });
        }
        Ok(())
    }

    /// Box `[−12√T, 12√T)` with spacing at most `dx`.
    pub fn default_grid(n: usize, t_max: f64, dx: f64) -> Result<GridSpec> {
        let half = 12.0 * t_max.max(1.0).sqrt();
        let points = ((2.0 * half / dx).ceil() as usize).next_power_of_two().max(8);
        GridSpec::new(n, half, points)
    }

    fn field_cfg(&self) -> FieldConfig {
        FieldConfig {
            boundary_threshold: self.boundary_threshold,
            ..FieldConfig::default()
        }
    }
}

fn heat(g: &GridField, t: f64) -> GridField {
    if t == 0.0 {
        return g.clone();
    }
    let plan = SpectralPlan::for_spec(g.spec());
    let zero = vec![0; g.spec().n];
    let v = plan.apply_symbol(g.values(), |xi, nyq| SpectralPlan::heat_derivative_symbol(&zero, t, xi, nyq));
    GridField::new(g.spec().clone(), v).expect("finite heat flow")
}

fn integral(g: &GridField) -> f64 {
    g.values().iter().sum::<f64>() * g.spec().cell_volume()
}

fn l1(g: &GridField) -> f64 {
    g.values().iter().map(|v| v.abs()).sum::<f64>() * g.spec().cell_volume()
}

/// A solved trajectory: every time node with its state and cached diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub states: Vec<GridField>,
    /// `‖u(t_k)‖_q` for `q = 1, 2, ∞`.
    pub norms: Vec<[f64; 3]>,
    /// `‖x^α u(t_k)‖₁` for `1 ≤ |α| ≤ m_track`.
    pub moments: BTreeMap<MultiIndex, Vec<f64>>,
    /// `∫₀^{t_k} ∫ f(u)` as accumulated by the scheme.
    pub source_mass: Vec<f64>,
    /// `∫₀^{T} f(u(s)) ds` as a field, accumulated by the scheme.
    pub source_integral: GridField,
    pub trust: Trust,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.config.n()
    }

    pub fn initial(&self) -> &GridField {
        &self.states[0]
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has nodes")
    }

    /// `sup_k (‖u‖₁ + (1+t_k)^{n/2}‖u‖_∞)`.
    pub fn x_norm_proxy(&self) -> f64 {
        let n = self.n() as f64;
        self.times
            .iter()
            .zip(&self.norms)
            .map(|(t, nm)| nm[0] + (1.0 + t).powf(n / 2.0) * nm[2])
            .fold(0.0, f64::max)
    }

    /// Index of the node at `t` (relative tolerance 1e-9).
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let k = self.times.partition_point(|&s| s < t);
        for c in [k.saturating_sub(1), k] {
            if c < self.times.len() && (self.times[c] - t).abs() <= 1e-9 * t.abs().max(1.0) {
                return Ok(c);
            }
        }
        Err(HeatError::InvalidArgument(format!("t = {t} is not a trajectory node")))
    }

    /// `(1+t)^{(n/2)(1−1/q)}‖u(t)‖_q` for `q ∈ {1, 2, ∞}`.
    pub fn decay_series(&self, q: f64) -> Result<Series> {
        let col = if q == 1.0 {
            0
        } else if q == 2.0 {
            1
        } else if q.is_infinite() {
            2
        } else {
            return Err(HeatError::InvalidArgument(format!("norm series cached only for q in {{1,2,inf}}, got {q}")));
        };
        let y = self
            .times
            .iter()
            .zip(&self.norms)
            .map(|(t, nm)| decay_scale(self.n(), q, 1.0 + t) * nm[col])
            .collect();
        Ok(Series::new(format!("decay_q{q}"), self.times.clone(), y))
    }

    /// Copy with `delta` added to the state at node `k`.
    pub fn perturbed(&self, k: usize, delta: &GridField) -> Result<Trajectory> {
        let mut out = self.clone();
        out.states[k] = out.states[k].add_scaled(delta, 1.0)?;
        Ok(out)
    }

    /// Norm-series CSV: `t,l1,l2,linf,x^α…,accumulator`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,l1,l2,linf");
        for a in self.moments.keys() {
            let _ = write!(out, ",x{}", a.entries().iter().map(|v| v.to_string()).collect::<Vec<_>>().join("_"));
        }
        out.push_str(",accumulator\n");
        for k in 0..self.times.len() {
            let nm = self.norms[k];
            let _ = write!(out, "{:.12e},{:.12e},{:.12e},{:.12e}", self.times[k], nm[0], nm[1], nm[2]);
            for s in self.moments.values() {
                let _ = write!(out, ",{:.12e}", s[k]);
            }
            let _ = writeln!(out, ",{:.12e}", self.source_mass[k]);
        }
        out
    }
}

fn diagnostics(u: &GridField, m_track: u32) -> ([f64; 3], Vec<(MultiIndex, f64)>) {
    let cv = u.spec().cell_volume();
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0f64);
    for v in u.values() {
        a += v.abs();
        b += v * v;
        c = c.max(v.abs());
    }
    let norms = [a * cv, (b * cv).sqrt(), c];
    let mut moments = Vec::new();
    for k in 1..=m_track {
        for alpha in MultiIndex::of_order(u.spec().n, k) {
            moments.push((alpha.clone(), u.weighted_l1_moment(&alpha, f64::INFINITY).value));
        }
    }
    (norms, moments)
}

/// Integrate from `φ` (scaled by `cfg.amplitude`) to `cfg.t_max`.
pub fn solve(phi: &GridField, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if phi.spec() != &cfg.grid {
        return Err(HeatError::InvalidArgument("initial datum grid differs from the configured grid".into()));
    }
    let u0 = phi.scaled(cfg.amplitude);
    let (norms0, moments0) = diagnostics(&u0, cfg.m_track);
    if norms0[0] + norms0[2] > cfg.smallness_budget {
        return Err(HeatError::PreconditionViolated(format!(
            "‖φ‖₁ + ‖φ‖_∞ = {:.4e} exceeds the smallness budget {:.4e}",
            norms0[0] + norms0[2],
            cfg.smallness_budget
        )));
    }
    let n = cfg.n() as f64;
    let nl = cfg.nonlinearity;
    let f = |u: &GridField| apply_f_oversampled(u, &nl, cfg.padding);
    let guard = cfg.guard_factor * norms0[2].max(f64::MIN_POSITIVE);

    let mut times = vec![0.0];
    let mut norms = vec![norms0];
    let mut moments: BTreeMap<MultiIndex, Vec<f64>> = moments0.into_iter().map(|(a, v)| (a, vec![v])).collect();
    let mut source_mass = vec![0.0];
    let mut acc = GridField::zeros(cfg.grid.clone());
    let mut trust = Trust::from_mass(u0.boundary_mass(), cfg.boundary_threshold);
    let mut states = vec![u0];
    let mut t = 0.0;
    while t < cfg.t_max * (1.0 - 1e-14) {
        let mut h = cfg.steps.step(t);
        if t + h > cfg.t_max || cfg.t_max - (t + h) < 1e-9 * h {
            h = cfg.t_max - t;
        }
        let u = states.last().expect("nonempty");
        let (next, inc) = if nl.is_zero() {
            (heat(u, h), None)
        } else {
            let fu = f(u);
            let eu = heat(u, h);
            let ef = heat(&fu, h);
            let v = eu.add_scaled(&ef, h)?;
            let fv = f(&v);
            let next = eu.add_scaled(&ef, 0.5 * h)?.add_scaled(&fv, 0.5 * h)?;
            let inc = fu.add_scaled(&fv, 1.0)?.scaled(0.5 * h);
            (next, Some(inc))
        };
        t += h;
        if let Some(inc) = inc {
            source_mass.push(source_mass.last().copied().unwrap_or(0.0) + integral(&inc));
            acc = acc.add_scaled(&inc, 1.0)?;
        } else {
            source_mass.push(0.0);
        }
        let (nm, mo) = diagnostics(&next, cfg.m_track);
        let scaled = (1.0 + t).powf(n / 2.0) * nm[2];
        if !scaled.is_finite() || scaled > guard {
            return Err(HeatError::DecayViolation {
                t,
                value: scaled,
                limit: guard,
            });
        }
        trust = trust.and(Trust::from_mass(next.boundary_mass(), cfg.boundary_threshold));
        for (a, v) in mo {
            moments.get_mut(&a).expect("tracked index").push(v);
        }
        norms.push(nm);
        times.push(t);
        states.push(next);
    }
    Ok(Trajectory {
        config: cfg.clone(),
        times,
        states,
        norms,
        moments,
        source_mass,
        source_integral: acc,
        trust,
    })
}

fn log_time_weight(t0: f64, t1: f64, s: f64) -> f64 {
    let (a, b) = ((1.0 + t0).ln(), (1.0 + t1).ln());
    ((1.0 + s).ln() - a) / (b - a)
}

/// `‖u(t_k) − (Φu)(t_k)‖₁`, with `Φu` recomputed from the stored states by
/// three-point Gauss-Legendre quadrature on every interval and linear
/// interpolation of `u` in `log(1+t)`.
pub fn picard_residual(traj: &Trajectory) -> Result<Series> {
    let nl = traj.config.nonlinearity;
    let padding = traj.config.padding;
    let phi = traj.initial();
    let mut duhamel = GridField::zeros(phi.spec().clone());
    let mut out = vec![0.0];
    for k in 0..traj.times.len() - 1 {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let h = t1 - t0;
        let mut next = heat(&duhamel, h);
        if !nl.is_zero() {
            for (x, w) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
                let s = t0 + 0.5 * h * (1.0 + x);
                let th = log_time_weight(t0, t1, s);
                let us = traj.states[k].scaled(1.0 - th).add_scaled(&traj.states[k + 1], th)?;
                let fs = apply_f_oversampled(&us, &nl, padding);
                next = next.add_scaled(&heat(&fs, t1 - s), 0.5 * h * w)?;
            }
        }
        duhamel = next;
        let phi_u = heat(phi, t1).add_scaled(&duhamel, 1.0)?;
        out.push(l1(&traj.states[k + 1].add_scaled(&phi_u, -1.0)?));
    }
    Ok(Series::new("picard_residual", traj.times.clone(), out))
}

/// `φ_N` with its tail bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectedData {
    pub level: u32,
    pub phi: GridField,
    /// `‖∫₀^T (f(u) − f(u_{N−1})) ds‖₁`.
    pub correction: f64,
    /// Estimated `‖∫_T^∞ (f(u) − f(u_{N−1})) ds‖₁`.
    pub tail: f64,
    /// Fitted exponent of the integrand's `L¹` norm over the last decade.
    pub tail_exponent: Option<f64>,
}

impl CorrectedData {
    pub fn tail_ratio(&self) -> f64 {
        if self.correction > 0.0 {
            self.tail / self.correction
        } else {
            0.0
        }
    }
}

/// `u_N` at every trajectory node.
#[derive(Clone, Debug)]
pub struct Approximant {
    pub level: u32,
    pub data: CorrectedData,
    pub times: Vec<f64>,
    pub states: Vec<GridField>,
    /// `∫₀^{t_k} e^{(t_k−s)Δ} f(u_{N−1}(s)) ds` at each node (zero for `N = 1`).
    duhamel: Vec<GridField>,
    nonlinearity: Nonlinearity,
    padding: usize,
    prior: Option<Box<Approximant>>,
}

impl Approximant {
    pub fn at_node(&self, k: usize) -> &GridField {
        &self.states[k]
    }

    /// `u_N(t)` for any `t` in `[0, T]`: exact flow of `φ_N` plus a trapezoid
    /// step of the Duhamel term from the preceding node.
    pub fn at(&self, t: f64) -> Result<GridField> {
        let hi = *self.times.last().expect("nodes");
        if !(t >= 0.0 && t <= hi * (1.0 + 1e-12)) {
            return Err(HeatError::InvalidArgument(format!("t = {t} outside [0, {hi}]")));
        }
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        if (self.times[k] - t).abs() <= 1e-12 * t.max(1.0) {
            return Ok(self.states[k].clone());
        }
        let flow = heat(&self.data.phi, t);
        let Some(prior) = &self.prior else {
            return Ok(flow);
        };
        let h = t - self.times[k];
        let f0 = apply_f_oversampled(prior.at_node(k), &self.nonlinearity, self.padding);
        let f1 = apply_f_oversampled(&prior.at(t)?, &self.nonlinearity, self.padding);
        let d = heat(&self.duhamel[k], h)
            .add_scaled(&heat(&f0, h), 0.5 * h)?
            .add_scaled(&f1, 0.5 * h)?;
        flow.add_scaled(&d, 1.0)
    }
}

/// Power-law tail `∫_T^∞ A s^b ds` fitted to the last decade of `(t, y)`.
fn tail_estimate(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let t_end = *times.last().expect("nodes");
    let series = Series::new("tail", times.to_vec(), values.to_vec());
    let fit = fit_power_window(&series, t_end / 10.0, t_end)?;
    let b = fit.exponent;
    if !(b < -1.0) {
        return Ok((f64::INFINITY, b));
    }
    let a = fit.log_prefactor.exp();
    Ok((a * t_end.powf(b + 1.0) / (-b - 1.0), b))
}

/// `∫_T^∞ c (s/T)^b e^{κ(s−T)Δ} ψ ds` for the integrand `ψ` at `T`.
///
/// The spreading rate `κ = Var|ψ| / (2nT)` keeps the width of `ψ` growing
/// like `√s`; `c` matches the fitted magnitude at `T`. Integrated exactly in
/// time up to `s = 64T` with Gauss-Legendre panels, the remainder carries the
/// shape at `64T`.
fn self_similar_tail(psi: &GridField, t_end: f64, b: f64, c: f64) -> Result<GridField> {
    let spec = psi.spec();
    let n = spec.n;
    let mut x = [0.0; 2];
    let (mut mass, mut mean) = (0.0, [0.0; 2]);
    for (i, v) in psi.values().iter().enumerate() {
        spec.coords(i, &mut x);
        mass += v.abs();
        for j in 0..n {
            mean[j] += v.abs() * x[j];
        }
    }
    let mut var = 0.0;
    if mass > 0.0 {
        for m in mean.iter_mut() {
            *m /= mass;
        }
        for (i, v) in psi.values().iter().enumerate() {
            spec.coords(i, &mut x);
            var += v.abs() * (0..n).map(|j| (x[j] - mean[j]).powi(2)).sum::<f64>();
        }
        var /= mass;
    }
    let kappa = var / (2.0 * n as f64 * t_end);
    let lam_max = 64.0f64;
    let panels = 24;
    let ratio = lam_max.powf(1.0 / panels as f64);
    let mut out = GridField::zeros(spec.clone());
    let mut lo = 1.0f64;
    for _ in 0..panels {
        let hi = lo * ratio;
        for (node, w) in GL3_NODES.iter().zip(GL3_WEIGHTS) {
            let lam = lo + 0.5 * (hi - lo) * (1.0 + node);
            let weight = c * t_end * lam.powf(b) * 0.5 * (hi - lo) * w;
            out = out.add_scaled(&heat(psi, kappa * t_end * (lam - 1.0)), weight)?;
        }
        lo = hi;
    }
    let far = c * t_end * lam_max.powf(b + 1.0) / (-b - 1.0);
    out.add_scaled(&heat(psi, kappa * t_end * (lam_max - 1.0)), far)
}

/// `φ_N = φ + ∫₀^∞ (f(u) − f(u_{N−1})) ds`; `prior` holds `u_1 … u_{N−1}`.
///
/// `∫₀^T f(u)` is the scheme's own accumulator and `∫₀^T f(u_{N−1})` the
/// trapezoid rule on the nodes, matching how each flow is built. The tail
/// beyond `T` has the fitted power-law magnitude and a self-similar shape.
pub fn corrected_data(traj: &Trajectory, level: u32, prior: &[Approximant]) -> Result<CorrectedData> {
    if level == 0 {
        return Err(HeatError::InvalidArgument("level must be at least 1".into()));
    }
    if prior.len() + 1 < level as usize {
        return Err(HeatError::InvalidArgument(format!(
            "level {level} needs {} prior approximants, got {}",
            level - 1,
            prior.len()
        )));
    }
    let cfg = &traj.config;
    let nl = cfg.nonlinearity;
    let phi = traj.initial();
    let prev = if level >= 2 { Some(&prior[level as usize - 2]) } else { None };
    let f = |g: &GridField| apply_f_oversampled(g, &nl, cfg.padding);
    let last = traj.times.len() - 1;
    let mut integral_field = traj.source_integral.clone();
    let mut integrand_l1 = Vec::with_capacity(traj.times.len());
    let mut f_prev_last = None;
    let mut f_prev_k = prev.map(|p| f(p.at_node(0)));
    for k in 0..=last {
        let fu = f(&traj.states[k]);
        let fp = match prev {
            Some(p) if k > 0 => {
                let fk1 = f(p.at_node(k));
                let h = traj.times[k] - traj.times[k - 1];
                let fk0 = f_prev_k.replace(fk1.clone()).expect("set above");
                integral_field = integral_field
                    .add_scaled(&fk0, -0.5 * h)?
                    .add_scaled(&fk1, -0.5 * h)?;
                Some(fk1)
            }
            Some(_) => f_prev_k.clone(),
            None => None,
        };
        let diff = match &fp {
            Some(fp) => fu.add_scaled(fp, -1.0)?,
            None => fu,
        };
        integrand_l1.push(l1(&diff));
        if k == last {
            f_prev_last = Some(diff);
        }
    }
    let correction = l1(&integral_field);
    let shape = f_prev_last.expect("final integrand");
    let shape_l1 = l1(&shape);
    let (tail, tail_exponent, tail_field) = if nl.is_zero() || shape_l1 == 0.0 || correction == 0.0 {
        (0.0, None, None)
    } else {
        let start = traj.times.partition_point(|&t| t <= 0.0);
        let (tail, b) = tail_estimate(&traj.times[start..], &integrand_l1[start..])?;
        let field = if tail.is_finite() {
            Some(self_similar_tail(&shape, traj.final_time(), b, tail / shape_l1 * (-b - 1.0) / traj.final_time())?)
        } else {
            None
        };
        (tail, Some(b), field)
    };
    let limit = cfg.tail_fraction * correction;
    if tail > limit {
        return Err(HeatError::TailUntrusted {
            tail,
            correction,
            limit,
        });
    }
    let mut phi_n = phi.add_scaled(&integral_field, 1.0)?;
    if let Some(tf) = tail_field {
        phi_n = phi_n.add_scaled(&tf, 1.0)?;
    }
    Ok(CorrectedData {
        level,
        phi: phi_n,
        correction,
        tail,
        tail_exponent,
    })
}

/// `u_N` on the trajectory nodes from `φ_N` and the previous approximant.
pub fn build_approximant(traj: &Trajectory, data: CorrectedData, prior: Option<&Approximant>) -> Result<Approximant> {
    let level = data.level;
    if (level >= 2) != prior.is_some() || prior.is_some_and(|p| p.level + 1 != level) {
        return Err(HeatError::InvalidArgument(format!(
            "approximant level {level} needs exactly the level {} approximant",
            level.saturating_sub(1)
        )));
    }
    let nl = traj.config.nonlinearity;
    let padding = traj.config.padding;
    let spec = traj.config.grid.clone();
    let mut states = Vec::with_capacity(traj.times.len());
    let mut duhamel = Vec::new();
    let mut d = GridField::zeros(spec.clone());
    for (k, &t) in traj.times.iter().enumerate() {
        if let Some(p) = prior {
            if k > 0 {
                let h = t - traj.times[k - 1];
                let f0 = apply_f_oversampled(p.at_node(k - 1), &nl, padding);
                let f1 = apply_f_oversampled(p.at_node(k), &nl, padding);
                d = heat(&d, h)
                    .add_scaled(&heat(&f0, h), 0.5 * h)?
                    .add_scaled(&f1, 0.5 * h)?;
            }
            duhamel.push(d.clone());
            states.push(heat(&data.phi, t).add_scaled(&d, 1.0)?);
        } else {
            states.push(heat(&data.phi, t));
        }
    }
    Ok(Approximant {
        level,
        data,
        times: traj.times.clone(),
        states,
        duhamel,
        nonlinearity: nl,
        padding,
        prior: prior.map(|p| Box::new(p.clone())),
    })
}

/// `u_1, …, u_N` in order.
pub fn build_approximants(traj: &Trajectory, levels: u32) -> Result<Vec<Approximant>> {
    let mut out: Vec<Approximant> = Vec::new();
    for level in 1..=levels {
        let data = corrected_data(traj, level, &out)?;
        let next = build_approximant(traj, data, out.last())?;
        out.push(next);
    }
    Ok(out)
}

/// `u_N(t)` from a list holding `u_1 … u_N`.
pub fn approximant(level: u32, approximants: &[Approximant], t: f64) -> Result<GridField> {
    let a = approximants
        .iter()
        .find(|a| a.level == level)
        .ok_or_else(|| HeatError::InvalidArgument(format!("approximant level {level} not built")))?;
    a.at(t)
}

fn select_nodes(traj: &Trajectory, t_grid: Option<&[f64]>, after: f64) -> Result<Vec<usize>> {
    match t_grid {
        Some(ts) => ts
            .iter()
            .map(|&t| {
                if !(t > after) {
                    return Err(HeatError::InvalidArgument(format!("t = {t} must exceed {after}")));
                }
                traj.node_index(t)
            })
            .collect(),
        None => Ok((0..traj.times.len()).filter(|&k| traj.times[k] > after).collect()),
    }
}

/// `t^{(n/2)(1−1/q)}‖u(t) − u_N(t)‖_q` at nodes with `t > 2^{N−1}` (or the given nodes).
pub fn remainder_series(
    traj: &Trajectory,
    approx: &Approximant,
    q: f64,
    t_grid: Option<&[f64]>,
) -> Result<Flagged<Series>> {
    let after = 2f64.powi(approx.level as i32 - 1);
    let nodes = select_nodes(traj, t_grid, after)?;
    let thr = traj.config.boundary_threshold;
    let mut trust = Trust::Trusted;
    let mut ts = Vec::with_capacity(nodes.len());
    let mut ys = Vec::with_capacity(nodes.len());
    for k in nodes {
        let t = traj.times[k];
        let diff = traj.states[k].add_scaled(approx.at_node(k), -1.0)?;
        let nm = diff.lq_norm(q, thr);
        trust = trust.and(Trust::from_mass(traj.states[k].boundary_mass(), thr));
        ts.push(t);
        ys.push(decay_scale(traj.n(), q, t) * nm.value);
    }
    Ok(Flagged::new(
        Series::new(format!("remainder_N{}_q{}", approx.level, q), ts, ys),
        trust,
    ))
}

/// `t, q, scaled_remainder, N` rows.
pub fn remainder_csv(rows: &[(u32, f64, &Series)]) -> String {
    let mut out = String::from("t,q,scaled_remainder,N\n");
    for (level, q, s) in rows {
        for (t, y) in s.t.iter().zip(&s.y) {
            let _ = writeln!(out, "{t:.12e},{q},{y:.12e},{level}");
        }
    }
    out
}

/// `Σ_{|α|=m}‖x^α u(t)‖₁` and its ratio against `1 + t^{m/2}`.
pub fn weighted_growth_series(traj: &Trajectory, m: u32) -> Result<(Series, Series)> {
    let sums: Vec<f64> = if m == 0 {
        traj.norms.iter().map(|nm| nm[0]).collect()
    } else {
        if m > traj.config.m_track {
            return Err(HeatError::InvalidArgument(format!(
                "moments tracked only through order {}",
                traj.config.m_track
            )));
        }
        (0..traj.times.len())
            .map(|k| {
                traj.moments
                    .iter()
                    .filter(|(a, _)| a.order() == m)
                    .map(|(_, s)| s[k])
                    .sum()
            })
            .collect()
    };
    let ratio = traj
        .times
        .iter()
        .zip(&sums)
        .map(|(t, s)| s / (1.0 + t.powf(m as f64 / 2.0)))
        .collect();
    Ok((
        Series::new(format!("moment_m{m}"), traj.times.clone(), sums),
        Series::new(format!("moment_ratio_m{m}"), traj.times.clone(), ratio),
    ))
}

/// `t^{(n/2)(1−1/q)}‖u(t) − Σ_{k≤m} 2^{−k} t^{−k/2} Σ_{|α|=k} c_α δ_t(h_α G₁)‖_q`
/// with coefficients from the first corrected datum.
pub fn profile_remainder_series(
    traj: &Trajectory,
    data: &CorrectedData,
    m: u32,
    q: f64,
    t_grid: Option<&[f64]>,
) -> Result<Flagged<Series>> {
    let n = traj.n();
    let p = traj.config.nonlinearity.p;
    if m > 1 {
        return Err(HeatError::InvalidArgument(format!("profile order must be 0 or 1, got {m}")));
    }
    let need = 1.0 + (3.0 + m as f64) / n as f64;
    if !traj.config.nonlinearity.is_zero() && !(p > need) {
        return Err(HeatError::PreconditionViolated(format!(
            "profile order {m} needs p > {need}, got p = {p}"
        )));
    }
    if data.level != 1 {
        return Err(HeatError::InvalidArgument("profile coefficients come from the level-1 corrected datum".into()));
    }
    let cfg = traj.config.field_cfg();
    let profile = build_expansion(&Field::Grid(data.phi.clone()), m, &cfg)?;
    let mut trust = profile.trust;
    let nodes = select_nodes(traj, t_grid, 0.0)?;
    let mut ts = Vec::with_capacity(nodes.len());
    let mut ys = Vec::with_capacity(nodes.len());
    for k in nodes {
        let t = traj.times[k];
        let approx = eval_expansion(&profile.value, t).to_grid(&traj.config.grid);
        let diff = traj.states[k].add_scaled(&approx, -1.0)?;
        let nm = diff.lq_norm(q, cfg.boundary_threshold);
        trust = trust.and(Trust::from_mass(traj.states[k].boundary_mass(), cfg.boundary_threshold));
        ts.push(t);
        ys.push(decay_scale(n, q, t) * nm.value);
    }
    Ok(Flagged::new(Series::new(format!("profile_m{m}_q{q}"), ts, ys), trust))
}
