//! The heat semigroup `e^{tΔ}φ = G_t ∗ φ` on each field backend.
//!
//! Backends implement [`Propagator`] and are looked up by name in a
//! [`PropagatorRegistry`]:
//!
//! * `mixture`: exact closed form through the scaled Hermite basis,
//! * `spectral`: FFT on the periodic grid, multiplying by `e^{−t|ξ|²}`,
//! * `oracle`: direct quadrature of the convolution integral at grid nodes.

use std::collections::BTreeMap;

use crate::error::{HeatError, Result};
use crate::fields::{check_q, Field, FieldConfig, Flagged, GaussianTerm, GridField, GridSpec, Mixture, SpectralPlan, Trust};
use crate::multi_index::MultiIndex;
use crate::poly::MultiPoly;
use crate::profiles::{h_alpha, monomial_in_hermite_basis, profile_norm};
use crate::quadrature::{integrate_2d, integrate_breaks, QuadConfig};

/// A strategy for applying `∂^α e^{tΔ}`.
pub trait Propagator: Send + Sync {
    fn name(&self) -> &str;

    /// `e^{tΔ}φ`; `t = 0` returns `φ` unchanged.
    fn propagate(&self, phi: &Field, t: f64) -> Result<Flagged<Field>>;

    /// `∂^α e^{tΔ}φ` for `t > 0`.
    fn propagate_derivative(&self, phi: &Field, alpha: &MultiIndex, t: f64) -> Result<Flagged<Field>>;
}

/// Backend selection and numerical controls.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorConfig {
    pub backend: String,
    pub tolerance: f64,
    pub padding: usize,
    /// Target grid for backends that must sample mixture input.
    pub grid: Option<GridSpec>,
    pub field: FieldConfig,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            backend: "mixture".into(),
            tolerance: 1e-10,
            padding: 1,
            grid: None,
            field: FieldConfig::default(),
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(HeatError::InvalidArgument("propagator tolerance must be positive".into()));
        }
        if self.padding == 0 || !self.padding.is_power_of_two() {
            return Err(HeatError::InvalidArgument(
                "padding factor must be a power of two >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_time(t: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { t >= 0.0 } else { t > 0.0 };
    if ok && t.is_finite() {
        Ok(())
    } else {
        Err(HeatError::InvalidArgument(format!("invalid time {t}")))
    }
}

/// Exact heat flow of a mixture.
///
/// Each term `P(y) G_s(y)` is rewritten as `Σ a_β h_β(y/√s) G_s(y)`; since
/// `h_β(y/√s) G_s = (−2)^{|β|} s^{|β|/2} ∂^β G_s` and `e^{tΔ}∂^β G_s = ∂^β G_{s+t}`,
/// each basis element maps to `(s/(s+t))^{|β|/2} h_β(y/√(s+t)) G_{s+t}(y)`.
pub fn heat_mixture(phi: &Mixture, t: f64) -> Mixture {
    if t == 0.0 {
        return phi.clone();
    }
    let n = phi.dim();
    let terms = phi
        .terms()
        .iter()
        .map(|term| {
            let s = term.scale;
            let s_new = s + t;
            let z_poly = term.poly.scale_vars(s.sqrt());
            let mut basis: BTreeMap<MultiIndex, f64> = BTreeMap::new();
            for (gamma, c) in z_poly.coeffs() {
                for (beta, w) in monomial_in_hermite_basis(gamma) {
                    *basis.entry(beta).or_insert(0.0) += c * w;
                }
            }
            let ratio = s / s_new;
            let mut out = MultiPoly::zero(n);
            for (beta, a) in basis {
                let damp = ratio.powf(beta.order() as f64 / 2.0);
                out.add_scaled(&h_alpha(&beta).scale_vars(1.0 / s_new.sqrt()), a * damp);
            }
            GaussianTerm::new(term.coeff, out, s_new, term.center.clone())
        })
        .filter(|t| !t.poly.is_zero())
        .collect();
    Mixture::from_terms(n, terms)
}

/// Exact closed-form backend for mixtures.
#[derive(Clone, Debug, Default)]
pub struct MixturePropagator;

impl Propagator for MixturePropagator {
    fn name(&self) -> &str {
        "mixture"
    }

    fn propagate(&self, phi: &Field, t: f64) -> Result<Flagged<Field>> {
        check_time(t, true)?;
        match phi {
            Field::Mixture(m) => Ok(Flagged::trusted(Field::Mixture(heat_mixture(m, t)))),
            Field::Grid(_) => Err(HeatError::Unsupported {
                backend: "mixture".into(),
                what: "grid fields".into(),
            }),
        }
    }

    fn propagate_derivative(&self, phi: &Field, alpha: &MultiIndex, t: f64) -> Result<Flagged<Field>> {
        check_time(t, false)?;
        let u = self.propagate(phi, t)?;
        match u.value {
            Field::Mixture(m) => Ok(Flagged::trusted(Field::Mixture(m.derivative(alpha)))),
            Field::Grid(_) => unreachable!("mixture backend returns mixtures"),
        }
    }
}

/// FFT backend on the periodic box.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    pub grid: Option<GridSpec>,
    pub padding: usize,
    pub field: FieldConfig,
}

impl SpectralPropagator {
    pub fn new(grid: Option<GridSpec>) -> Self {
        SpectralPropagator {
            grid,
            padding: 1,
            field: FieldConfig::default(),
        }
    }

    fn to_grid(&self, phi: &Field) -> Result<GridField> {
        match phi {
            Field::Grid(g) => Ok(g.clone()),
            Field::Mixture(m) => match &self.grid {
                Some(spec) => Ok(m.to_grid(spec)),
                None => Err(HeatError::Unsupported {
                    backend: "spectral".into(),
                    what: "mixture input without a configured grid".into(),
                }),
            },
        }
    }

    /// Apply `(iξ)^α e^{−t|ξ|²}` to grid values.
    pub fn apply(&self, g: &GridField, alpha: &[u32], t: f64) -> GridField {
        let spec = g.spec();
        if self.padding <= 1 {
            let plan = SpectralPlan::for_spec(spec);
            let v = plan.apply_symbol(g.values(), |xi, nyq| {
                SpectralPlan::heat_derivative_symbol(alpha, t, xi, nyq)
            });
            return GridField::new(spec.clone(), v).expect("finite spectral output");
        }
        // zero-pad onto a box `padding` times larger with the same spacing
        let p = self.padding;
        let big = GridSpec {
            n: spec.n,
            half_width: spec.half_width * p as f64,
            points: spec.points * p,
        };
        let off = (p - 1) * spec.points / 2;
        let np = spec.points;
        let mut vals = vec![0.0; big.len()];
        for (i, v) in g.values().iter().enumerate() {
            vals[embed(spec.n, i, np, big.points, off)] = *v;
        }
        let plan = SpectralPlan::for_spec(&big);
        let out = plan.apply_symbol(&vals, |xi, nyq| {
            SpectralPlan::heat_derivative_symbol(alpha, t, xi, nyq)
        });
        let v = (0..spec.len())
            .map(|i| out[embed(spec.n, i, np, big.points, off)])
            .collect();
        GridField::new(spec.clone(), v).expect("finite spectral output")
    }
}

fn embed(n: usize, i: usize, np: usize, big: usize, off: usize) -> usize {
    match n {
        1 => i + off,
        _ => (i / np + off) * big + (i % np + off),
    }
}

impl Propagator for SpectralPropagator {
    fn name(&self) -> &str {
        "spectral"
    }

    fn propagate(&self, phi: &Field, t: f64) -> Result<Flagged<Field>> {
        check_time(t, true)?;
        let g = self.to_grid(phi)?;
        let out = if t == 0.0 {
            g
        } else {
            self.apply(&g, &vec![0; g.spec().n], t)
        };
        let trust = Trust::from_mass(out.boundary_mass(), self.field.boundary_threshold);
        Ok(Flagged::new(Field::Grid(out), trust))
    }

    fn propagate_derivative(&self, phi: &Field, alpha: &MultiIndex, t: f64) -> Result<Flagged<Field>> {
        check_time(t, false)?;
        let g = self.to_grid(phi)?;
        let out = self.apply(&g, alpha.entries(), t);
        // trust follows the undifferentiated flow
        let flow = self.apply(&g, &vec![0; g.spec().n], t);
        let trust = Trust::from_mass(flow.boundary_mass(), self.field.boundary_threshold);
        Ok(Flagged::new(Field::Grid(out), trust))
    }
}

/// `(e^{tΔ}φ)(x) = ∫ G_t(x−y) φ(y) dy` by adaptive quadrature over
/// `|y − x| ≤ 12 √max(t, 1)`.
pub fn convolve_oracle(phi: &Mixture, t: f64, x: &[f64], tol: f64) -> Result<f64> {
    check_time(t, false)?;
    let n = phi.dim();
    let r = 12.0 * t.max(1.0).sqrt();
    let kernel = Mixture::gauss_kernel(n, t);
    let cfg = QuadConfig {
        abs_tol: tol,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let breaks = |j: usize| {
        let (lo, hi) = (x[j] - r, x[j] + r);
        let mut b = vec![lo, x[j], hi];
        for term in phi.terms() {
            let c = term.center[j];
            let w = term.scale.sqrt();
            for p in [c - 4.0 * w, c, c + 4.0 * w] {
                if p > lo && p < hi {
                    b.push(p);
                }
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    };
    let res = match n {
        1 => integrate_breaks(|y| kernel.eval(&[x[0] - y]) * phi.eval(&[y]), &breaks(0), &cfg),
        2 => integrate_2d(
            |y0, y1| kernel.eval(&[x[0] - y0, x[1] - y1]) * phi.eval(&[y0, y1]),
            &breaks(0),
            &breaks(1),
            &cfg,
        ),
        _ => {
            return Err(HeatError::Unsupported {
                backend: "oracle".into(),
                what: format!("dimension {n}"),
            })
        }
    };
    if !res.converged {
        return Err(HeatError::QuadratureFailed(format!(
            "convolution at {x:?}: error estimate {}",
            res.error
        )));
    }
    Ok(res.value)
}

/// Quadrature oracle evaluated at every node of a configured grid.
#[derive(Clone, Debug)]
pub struct OraclePropagator {
    pub grid: Option<GridSpec>,
    pub tolerance: f64,
}

impl OraclePropagator {
    fn sample(&self, phi: &Field, f: impl Fn(&Mixture, &[f64]) -> Result<f64>) -> Result<Flagged<Field>> {
        let m = phi.as_mixture().ok_or_else(|| HeatError::Unsupported {
            backend: "oracle".into(),
            what: "grid fields".into(),
        })?;
        let spec = self.grid.clone().ok_or_else(|| HeatError::Unsupported {
            backend: "oracle".into(),
            what: "propagation without a configured grid".into(),
        })?;
        let mut x = [0.0; 2];
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.len() {
            spec.coords(i, &mut x);
            values.push(f(m, &x[..spec.n])?);
        }
        Ok(Flagged::trusted(Field::Grid(GridField::new(spec, values)?)))
    }
}

impl Propagator for OraclePropagator {
    fn name(&self) -> &str {
        "oracle"
    }

    fn propagate(&self, phi: &Field, t: f64) -> Result<Flagged<Field>> {
        check_time(t, true)?;
        if t == 0.0 {
            return self.sample(phi, |m, x| Ok(m.eval(x)));
        }
        self.sample(phi, |m, x| convolve_oracle(m, t, x, self.tolerance))
    }

    fn propagate_derivative(&self, phi: &Field, alpha: &MultiIndex, t: f64) -> Result<Flagged<Field>> {
        check_time(t, false)?;
        // ∂^α (G_t ∗ φ) = G_t ∗ ∂^α φ for smooth mixtures
        let m = phi.as_mixture().ok_or_else(|| HeatError::Unsupported {
            backend: "oracle".into(),
            what: "grid fields".into(),
        })?;
        let d = Field::Mixture(m.derivative(alpha));
        self.propagate(&d, t)
    }
}

/// Name-keyed collection of propagator strategies.
pub struct PropagatorRegistry {
    entries: BTreeMap<String, Box<dyn Propagator>>,
}

impl PropagatorRegistry {
    pub fn empty() -> Self {
        PropagatorRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// Registry holding the three built-in backends.
    pub fn with_defaults(cfg: &PropagatorConfig) -> Self {
        let mut r = Self::empty();
        r.register(Box::new(MixturePropagator));
        r.register(Box::new(SpectralPropagator {
            grid: cfg.grid.clone(),
            padding: cfg.padding,
            field: cfg.field,
        }));
        r.register(Box::new(OraclePropagator {
            grid: cfg.grid.clone(),
            tolerance: cfg.tolerance,
        }));
        r
    }

    pub fn register(&mut self, p: Box<dyn Propagator>) {
        self.entries.insert(p.name().to_string(), p);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Propagator> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| HeatError::UnknownBackend(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(|s| s.as_str()).collect()
    }

    /// The backend selected by `cfg.backend`.
    pub fn select(cfg: &PropagatorConfig) -> Result<Box<dyn Propagator>> {
        cfg.validate()?;
        let mut r = Self::with_defaults(cfg);
        r.entries
            .remove(&cfg.backend)
            .ok_or_else(|| HeatError::UnknownBackend(cfg.backend.clone()))
    }
}

/// `t^{−(n/2)(1/q−1/p)−|α|/2} ‖∂^α G₁‖_r ‖φ‖_q` with `1 + 1/p = 1/r + 1/q`.
pub fn smoothing_bound(n: usize, p: f64, q: f64, alpha: &MultiIndex, t: f64, phi_q: f64) -> Result<f64> {
    check_q(p)?;
    check_q(q)?;
    if q > p {
        return Err(HeatError::InvalidArgument(format!("need q <= p, got q={q}, p={p}")));
    }
    let inv = |v: f64| if v.is_infinite() { 0.0 } else { 1.0 / v };
    let inv_r = 1.0 + inv(p) - inv(q);
    let r = if inv_r == 0.0 { f64::INFINITY } else { 1.0 / inv_r };
    let k = alpha.order() as f64;
    let d_norm = 2f64.powf(-k) * profile_norm(alpha, r)?;
    let e = (n as f64 / 2.0) * (inv(q) - inv(p)) + k / 2.0;
    Ok(t.powf(-e) * d_norm * phi_q)
}

/// Table of `‖e^{tΔ}φ‖_p / [(1+t)^{−(n/2)(1/q−1/p)} (‖φ‖_q + ‖φ‖_p)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingReport {
    pub p: f64,
    pub q: f64,
    pub rows: Vec<(f64, f64)>,
    pub max_ratio: f64,
}

pub fn smoothing_constant_check(
    phi: &Field,
    p: f64,
    q: f64,
    t_grid: &[f64],
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<SmoothingReport> {
    check_q(p)?;
    check_q(q)?;
    if q > p {
        return Err(HeatError::InvalidArgument(format!("need q <= p, got q={q}, p={p}")));
    }
    let inv = |v: f64| if v.is_infinite() { 0.0 } else { 1.0 / v };
    let n = phi.dim() as f64;
    let base = phi.lq_norm(q, cfg)?.value + phi.lq_norm(p, cfg)?.value;
    let mut rows = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for &t in t_grid {
        let u = propagator.propagate(phi, t)?;
        let num = u.value.lq_norm(p, cfg)?.value;
        let den = (1.0 + t).powf(-(n / 2.0) * (inv(q) - inv(p))) * base;
        let ratio = if den > 0.0 { num / den } else { 0.0 };
        max_ratio = max_ratio.max(ratio);
        rows.push((t, ratio));
    }
    Ok(SmoothingReport {
        p,
        q,
        rows,
        max_ratio,
    })
}
