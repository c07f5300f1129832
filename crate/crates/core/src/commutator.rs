//! The commutator `R_α(t)φ = x^α e^{tΔ}φ − e^{tΔ}(x^α φ)` as an exact list of
//! terms `c · t^ℓ · ∂^β e^{tΔ} x^γ φ`, built by the recursion
//!
//! ```text
//! R_{e_j}      = −2t ∂_j e^{tΔ}
//! R_{α'+e_j}   = −2t ∂_j e^{tΔ} x^{α'} + x_j R_{α'}
//! x_j (t^ℓ ∂^β e^{tΔ} x^γ) = t^ℓ ∂^β e^{tΔ} x^{γ+e_j} − 2 t^{ℓ+1} ∂^{β+e_j} e^{tΔ} x^γ − β_j t^ℓ ∂^{β−e_j} e^{tΔ} x^γ
//! ```
//!
//! plus numerical checks of the identity, the weighted estimates and the
//! Gaussian weight windows `w(x) = x_j e^{−ε|x|²}`.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::fields::{Field, FieldConfig, Flagged, GridField, Mixture, Trust};
use crate::multi_index::MultiIndex;
use crate::quadrature::{golden_max, integrate_2d, integrate_breaks};
use crate::semigroup::Propagator;

pub type Coeff = Ratio<i64>;

/// `coeff · t^ell · ∂^beta e^{tΔ} x^gamma`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutatorTerm {
    pub coeff: Coeff,
    pub ell: u32,
    pub beta: MultiIndex,
    pub gamma: MultiIndex,
}

impl CommutatorTerm {
    pub fn coeff_f64(&self) -> f64 {
        self.coeff.to_f64().unwrap_or(f64::NAN)
    }

    /// The three-way rewrite of `x_j · self`, unmerged.
    pub fn times_coordinate(&self, j: usize) -> Vec<CommutatorTerm> {
        let mut out = vec![
            CommutatorTerm {
                coeff: self.coeff,
                ell: self.ell,
                beta: self.beta.clone(),
                gamma: self.gamma.plus_unit(j),
            },
            CommutatorTerm {
                coeff: self.coeff * -2,
                ell: self.ell + 1,
                beta: self.beta.plus_unit(j),
                gamma: self.gamma.clone(),
            },
        ];
        if let Some(lower) = self.beta.minus_unit(j) {
            out.push(CommutatorTerm {
                coeff: -self.coeff * i64::from(self.beta.get(j)),
                ell: self.ell,
                beta: lower,
                gamma: self.gamma.clone(),
            });
        }
        out
    }
}

/// Which sum of the expansion a term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermClass {
    /// `ℓ = |β|`, `β + γ = α`, `β ≠ 0`.
    First,
    /// `β + γ ≤ α`, `|β+γ| ≤ |α| − 2`, `|β| + 1 ≤ ℓ ≤ (|α| + |β| − |γ|)/2`.
    Second,
}

/// Class of the term's index shape for `alpha`, ignoring the coefficient.
pub fn classify(term: &CommutatorTerm, alpha: &MultiIndex) -> Option<TermClass> {
    let b = term.beta.order();
    let g = term.gamma.order();
    let a = alpha.order();
    let sum = term.beta.add(&term.gamma);
    if term.ell == b && sum == *alpha && b > 0 {
        return Some(TermClass::First);
    }
    let upper2 = a + b;
    if sum.le(alpha)
        && b + g + 2 <= a
        && term.ell > b
        && upper2 >= g
        && 2 * term.ell <= upper2 - g
    {
        return Some(TermClass::Second);
    }
    None
}

/// `α!/(β!γ!) (−2)^{|β|}`.
pub fn first_class_coefficient(alpha: &MultiIndex, beta: &MultiIndex, gamma: &MultiIndex) -> Coeff {
    let num = alpha.factorial_exact();
    let den = beta.factorial_exact() * gamma.factorial_exact();
    let mag = i64::try_from(num / den).expect("coefficient fits in i64");
    let sign = if beta.order() % 2 == 0 { 1 } else { -1 };
    Coeff::from_integer(sign * mag * (1i64 << beta.order()))
}

/// `R_α(t)` as merged exact terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommutatorExpansion {
    pub alpha: MultiIndex,
    pub terms: Vec<CommutatorTerm>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff_num: i64,
    coeff_den: i64,
    ell: u32,
    beta: MultiIndex,
    gamma: MultiIndex,
}

#[derive(Serialize, Deserialize)]
struct ExpansionRepr {
    alpha: MultiIndex,
    terms: Vec<TermRepr>,
}

impl Serialize for CommutatorExpansion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExpansionRepr {
            alpha: self.alpha.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| TermRepr {
                    coeff_num: *t.coeff.numer(),
                    coeff_den: *t.coeff.denom(),
                    ell: t.ell,
                    beta: t.beta.clone(),
                    gamma: t.gamma.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CommutatorExpansion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ExpansionRepr::deserialize(d)?;
        let mut terms = Vec::with_capacity(r.terms.len());
        for t in r.terms {
            if t.coeff_den == 0 {
                return Err(serde::de::Error::custom("zero denominator"));
            }
            terms.push(CommutatorTerm {
                coeff: Coeff::new(t.coeff_num, t.coeff_den),
                ell: t.ell,
                beta: t.beta,
                gamma: t.gamma,
            });
        }
        Ok(CommutatorExpansion { alpha: r.alpha, terms })
    }
}

type TermKey = (u32, MultiIndex, MultiIndex);

fn merge(terms: impl IntoIterator<Item = CommutatorTerm>) -> Vec<CommutatorTerm> {
    let mut acc: BTreeMap<TermKey, Coeff> = BTreeMap::new();
    for t in terms {
        *acc.entry((t.ell, t.beta, t.gamma)).or_insert_with(Coeff::zero) += t.coeff;
    }
    acc.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((ell, beta, gamma), coeff)| CommutatorTerm {
            coeff,
            ell,
            beta,
            gamma,
        })
        .collect()
}

impl CommutatorExpansion {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Expansion of `R_{α+e_j}` from this one, together with the unmerged
    /// terms of `x_j R_α`.
    pub fn step(&self, j: usize) -> (CommutatorExpansion, Vec<CommutatorTerm>) {
        let n = self.alpha.dim();
        let raw: Vec<CommutatorTerm> = self.terms.iter().flat_map(|t| t.times_coordinate(j)).collect();
        let lead = CommutatorTerm {
            coeff: Coeff::from_integer(-2),
            ell: 1,
            beta: MultiIndex::unit(n, j),
            gamma: self.alpha.clone(),
        };
        let merged = merge(std::iter::once(lead).chain(raw.iter().cloned()));
        (
            CommutatorExpansion {
                alpha: self.alpha.plus_unit(j),
                terms: merged,
            },
            raw,
        )
    }

    /// Every term admissible for `alpha`, first-class coefficients exact.
    pub fn check_classes(&self) -> Result<()> {
        for t in &self.terms {
            match classify(t, &self.alpha) {
                Some(TermClass::First) => {
                    let want = first_class_coefficient(&self.alpha, &t.beta, &t.gamma);
                    if t.coeff != want {
                        return Err(HeatError::PreconditionViolated(format!(
                            "first-class coefficient {} for beta={} gamma={}, expected {}",
                            t.coeff, t.beta, t.gamma, want
                        )));
                    }
                }
                Some(TermClass::Second) => {}
                None => {
                    return Err(HeatError::PreconditionViolated(format!(
                        "term (ell={}, beta={}, gamma={}) violates the class constraints for alpha={}",
                        t.ell, t.beta, t.gamma, self.alpha
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Build `R_α` by adding unit vectors in the given order, starting from `R_0 = 0`.
pub fn build_r_alpha_along(n: usize, axes: &[usize]) -> Result<CommutatorExpansion> {
    if axes.is_empty() {
        return Err(HeatError::InvalidArgument("|alpha| must be at least 1".into()));
    }
    if let Some(&j) = axes.iter().find(|&&j| j >= n) {
        return Err(HeatError::InvalidArgument(format!("axis {j} out of range for n={n}")));
    }
    let mut exp = CommutatorExpansion {
        alpha: MultiIndex::zero(n),
        terms: Vec::new(),
    };
    for &j in axes {
        exp = exp.step(j).0;
    }
    Ok(exp)
}

/// `R_α`, peeling the lowest nonzero axis at each level of the recursion.
pub fn build_r_alpha(alpha: &MultiIndex) -> Result<CommutatorExpansion> {
    // peeling the lowest axis first means building up from the highest
    let mut axes = Vec::new();
    for j in (0..alpha.dim()).rev() {
        axes.extend(std::iter::repeat(j).take(alpha.get(j) as usize));
    }
    build_r_alpha_along(alpha.dim(), &axes)
}

fn zero_like(phi: &Field) -> Field {
    match phi {
        Field::Mixture(m) => Field::Mixture(Mixture::zero(m.dim())),
        Field::Grid(g) => Field::Grid(GridField::zeros(g.spec().clone())),
    }
}

fn accumulate(acc: Option<Field>, f: Field, c: f64) -> Result<Field> {
    let f = f.scaled(c);
    match acc {
        None => Ok(f),
        Some(a) => a.add(&f),
    }
}

/// `Σ c t^ℓ ∂^β e^{tΔ}(x^γ φ)`.
pub fn eval_expansion_terms(
    exp: &CommutatorExpansion,
    phi: &Field,
    t: f64,
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<Flagged<Field>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(HeatError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    if exp.alpha.dim() != phi.dim() {
        return Err(HeatError::DimensionMismatch {
            expected: phi.dim(),
            got: exp.alpha.dim(),
        });
    }
    let mut trust = Trust::Trusted;
    let mut weighted: HashMap<MultiIndex, Field> = HashMap::new();
    let mut acc: Option<Field> = None;
    for term in &exp.terms {
        if !weighted.contains_key(&term.gamma) {
            let w = phi.monomial_mul(&term.gamma, cfg)?;
            trust = trust.and(w.trust);
            weighted.insert(term.gamma.clone(), w.value);
        }
        let src = &weighted[&term.gamma];
        let flow = if term.beta.is_zero() {
            propagator.propagate(src, t)?
        } else {
            propagator.propagate_derivative(src, &term.beta, t)?
        };
        trust = trust.and(flow.trust);
        let c = term.coeff_f64() * t.powi(term.ell as i32);
        acc = Some(accumulate(acc, flow.value, c)?);
    }
    Ok(Flagged::new(acc.unwrap_or_else(|| zero_like(phi)), trust))
}

/// `x^α e^{tΔ}φ − e^{tΔ}(x^α φ)` computed directly.
pub fn commutator_direct(
    phi: &Field,
    alpha: &MultiIndex,
    t: f64,
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<Flagged<Field>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(HeatError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let flow = propagator.propagate(phi, t)?;
    let left = flow.value.monomial_mul(alpha, cfg)?;
    let weighted = phi.monomial_mul(alpha, cfg)?;
    let right = propagator.propagate(&weighted.value, t)?;
    let trust = flow.trust.and(left.trust).and(weighted.trust).and(right.trust);
    Ok(Flagged::new(left.value.sub(&right.value)?, trust))
}

/// `‖commutator_direct − eval_expansion_terms(R_α)‖₁ / ‖x^α φ‖₁`.
pub fn identity_residual(
    phi: &Field,
    alpha: &MultiIndex,
    t: f64,
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<Flagged<f64>> {
    let exp = build_r_alpha(alpha)?;
    let direct = commutator_direct(phi, alpha, t, propagator, cfg)?;
    let expanded = eval_expansion_terms(&exp, phi, t, propagator, cfg)?;
    let diff = direct.value.sub(&expanded.value)?;
    let num = diff.lq_norm(1.0, cfg)?;
    let den = phi.weighted_l1_moment(alpha, cfg)?;
    let rel = if den.value > 0.0 { num.value / den.value } else { num.value };
    // the difference is round-off spread over the whole box, so its own
    // boundary mass says nothing; trust comes from the operands
    Ok(Flagged::new(rel, direct.trust.and(expanded.trust).and(den.trust)))
}

/// `‖ |x|^k φ ‖₁`.
pub fn radial_l1_moment(phi: &Field, k: u32, cfg: &FieldConfig) -> Result<Flagged<f64>> {
    let radial = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt().powi(k as i32);
    match phi {
        Field::Grid(g) => {
            let spec = g.spec();
            let mut x = [0.0; 2];
            let mut s = 0.0;
            for (i, v) in g.values().iter().enumerate() {
                spec.coords(i, &mut x);
                s += radial(&x[..spec.n]) * v.abs();
            }
            let trust = Trust::from_mass(g.boundary_mass(), cfg.boundary_threshold);
            Ok(Flagged::new(s * spec.cell_volume(), trust))
        }
        Field::Mixture(m) => {
            if m.is_zero() {
                return Ok(Flagged::trusted(0.0));
            }
            let with_origin = |axis: usize| {
                let mut b = m.breakpoints(axis);
                b.push(0.0);
                b.sort_by(f64::total_cmp);
                b.dedup();
                b
            };
            let r = match m.dim() {
                1 => integrate_breaks(|x| radial(&[x]) * m.eval(&[x]).abs(), &with_origin(0), &cfg.quad),
                2 => integrate_2d(
                    |x, y| radial(&[x, y]) * m.eval(&[x, y]).abs(),
                    &with_origin(0),
                    &with_origin(1),
                    &cfg.quad,
                ),
                n => {
                    return Err(HeatError::Unsupported {
                        backend: "mixture".into(),
                        what: format!("radial moments in dimension {n}"),
                    })
                }
            };
            if !r.converged {
                return Err(HeatError::QuadratureFailed(format!(
                    "radial moment |x|^{k}: error estimate {:.3e}",
                    r.error
                )));
            }
            Ok(Flagged::trusted(r.value))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Ratios of a weighted quantity to the shape of its bound over a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub m: u32,
    pub rows: Vec<EstimateRow>,
    /// Empirical constant: the largest ratio.
    pub max_ratio: f64,
    pub trusted: bool,
}

impl EstimateReport {
    fn from_rows(m: u32, rows: Vec<EstimateRow>, trust: Trust) -> Self {
        let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        EstimateReport {
            m,
            rows,
            max_ratio,
            trusted: trust.is_trusted(),
        }
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(HeatError::InvalidArgument("time grid must be nonempty and positive".into()));
    }
    Ok(())
}

/// `Σ_{|α|=m} ‖R_α(t)φ‖₁` against `t^{1/2}‖|x|^{m−1}φ‖₁ + (t^{1/2} + t^{m/2})‖φ‖₁`.
pub fn commutator_moment_estimate(
    phi: &Field,
    m: u32,
    t_grid: &[f64],
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<EstimateReport> {
    if m == 0 {
        return Err(HeatError::InvalidArgument("m must be at least 1".into()));
    }
    check_grid(t_grid)?;
    let n = phi.dim();
    let mut trust = phi.trust(cfg);
    let l1 = phi.lq_norm(1.0, cfg)?;
    let rad = radial_l1_moment(phi, m - 1, cfg)?;
    trust = trust.and(l1.trust).and(rad.trust);
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut lhs = 0.0;
        for a in MultiIndex::of_order(n, m) {
            let c = commutator_direct(phi, &a, t, propagator, cfg)?;
            let norm = c.value.lq_norm(1.0, cfg)?;
            trust = trust.and(c.trust).and(norm.trust);
            lhs += norm.value;
        }
        let rhs = t.sqrt() * rad.value + (t.sqrt() + t.powf(m as f64 / 2.0)) * l1.value;
        rows.push(EstimateRow {
            t,
            lhs,
            rhs,
            ratio: lhs / rhs,
        });
    }
    Ok(EstimateReport::from_rows(m, rows, trust))
}

/// `Σ_{|α|=m} ‖x^α e^{tΔ}φ‖₁` against `‖|x|^m φ‖₁ + t^{m/2}‖φ‖₁`.
pub fn weighted_flow_estimate(
    phi: &Field,
    m: u32,
    t_grid: &[f64],
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<EstimateReport> {
    check_grid(t_grid)?;
    let n = phi.dim();
    let mut trust = phi.trust(cfg);
    let l1 = phi.lq_norm(1.0, cfg)?;
    let rad = radial_l1_moment(phi, m, cfg)?;
    trust = trust.and(l1.trust).and(rad.trust);
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let u = propagator.propagate(phi, t)?;
        trust = trust.and(u.trust);
        let mut lhs = 0.0;
        for a in MultiIndex::of_order(n, m) {
            let w = u.value.weighted_l1_moment(&a, cfg)?;
            trust = trust.and(w.trust);
            lhs += w.value;
        }
        let rhs = rad.value + t.powf(m as f64 / 2.0) * l1.value;
        rows.push(EstimateRow {
            t,
            lhs,
            rhs,
            ratio: lhs / rhs,
        });
    }
    Ok(EstimateReport::from_rows(m, rows, trust))
}

/// A bounded multiplier used to localize a weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightWindow {
    /// `x_j e^{−ε|x|²}` with `ε ∈ (0, 1]`.
    Coordinate { axis: usize, eps: f64 },
    /// A constant multiplier; commutes with the heat flow.
    Constant { value: f64 },
}

impl WeightWindow {
    pub fn coordinate(axis: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(HeatError::InvalidArgument(format!("window eps must lie in (0, 1], got {eps}")));
        }
        Ok(WeightWindow::Coordinate { axis, eps })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            WeightWindow::Coordinate { axis, eps } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                x[axis] * (-eps * r2).exp()
            }
            WeightWindow::Constant { value } => value,
        }
    }

    /// `‖∇w‖_∞` in closed form.
    pub fn grad_sup(&self, _n: usize) -> f64 {
        match self {
            WeightWindow::Coordinate { .. } => 1.0,
            WeightWindow::Constant { .. } => 0.0,
        }
    }

    /// `‖Δw‖_∞` in closed form.
    ///
    /// `Δw = ε x_j e^{−ε|x|²}(4ε|x|² − 2(n+2))`; along the axis with
    /// `ρ = ε x_j²` this is `√ε √ρ e^{−ρ}(4ρ − 2(n+2))`, whose critical points
    /// solve `8ρ² − (4n+20)ρ + (2n+4) = 0`.
    pub fn laplacian_sup(&self, n: usize) -> f64 {
        match *self {
            WeightWindow::Coordinate { eps, .. } => {
                let nf = n as f64;
                let (a, b, c) = (8.0, -(4.0 * nf + 20.0), 2.0 * nf + 4.0);
                let disc = (b * b - 4.0 * a * c).sqrt();
                let g = |rho: f64| (rho.sqrt() * (-rho).exp() * (4.0 * rho - 2.0 * (nf + 2.0))).abs();
                let best = g((-b - disc) / (2.0 * a)).max(g((-b + disc) / (2.0 * a)));
                eps.sqrt() * best
            }
            WeightWindow::Constant { .. } => 0.0,
        }
    }

    /// `(|∇w|, Δw)` at `x` from the explicit derivatives.
    pub fn derivatives(&self, x: &[f64]) -> (f64, f64) {
        match *self {
            WeightWindow::Coordinate { axis, eps } => {
                let n = x.len() as f64;
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let e = (-eps * r2).exp();
                let xj = x[axis];
                let grad2: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(k, &xk)| {
                        let d = if k == axis { 1.0 } else { 0.0 } - 2.0 * eps * xj * xk;
                        (e * d).powi(2)
                    })
                    .sum();
                let lap = eps * xj * e * (4.0 * eps * r2 - 2.0 * (n + 2.0));
                (grad2.sqrt(), lap)
            }
            WeightWindow::Constant { .. } => (0.0, 0.0),
        }
    }

    /// `w · φ`.
    pub fn apply(&self, phi: &Field, cfg: &FieldConfig) -> Result<Flagged<Field>> {
        match (*self, phi) {
            (WeightWindow::Constant { value }, _) => Ok(Flagged::new(phi.scaled(value), phi.trust(cfg))),
            (WeightWindow::Coordinate { axis, eps }, Field::Mixture(m)) => {
                check_axis(axis, m.dim())?;
                let w = m.monomial_mul(&MultiIndex::unit(m.dim(), axis)).gaussian_weight(eps);
                Ok(Flagged::trusted(Field::Mixture(w)))
            }
            (WeightWindow::Coordinate { axis, .. }, Field::Grid(g)) => {
                check_axis(axis, g.spec().n)?;
                let spec = g.spec();
                let mut x = [0.0; 2];
                let vals = g
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        spec.coords(i, &mut x);
                        v * self.eval(&x[..spec.n])
                    })
                    .collect();
                let out = GridField::new(spec.clone(), vals)?;
                let trust = Trust::from_mass(out.boundary_mass(), cfg.boundary_threshold);
                Ok(Flagged::new(Field::Grid(out), trust))
            }
        }
    }
}

fn check_axis(axis: usize, n: usize) -> Result<()> {
    if axis < n {
        Ok(())
    } else {
        Err(HeatError::InvalidArgument(format!("window axis {axis} out of range for n={n}")))
    }
}

/// `‖∇G₁‖₁ = Γ((n+1)/2) / Γ(n/2)`.
pub fn grad_gauss_l1(n: usize) -> f64 {
    let mut r = if n % 2 == 1 {
        1.0 / std::f64::consts::PI.sqrt()
    } else {
        std::f64::consts::PI.sqrt() / 2.0
    };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        r *= (k as f64 + 1.0) / k as f64;
        k += 2;
    }
    r
}

/// Measured commutator of a window with the heat flow and its analytic bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub value: f64,
    pub bound: f64,
    pub trusted: bool,
}

/// `‖w e^{tΔ}φ − e^{tΔ}(wφ)‖₁` and `(‖Δw‖_∞ t + ‖∇w‖_∞ ‖∇G₁‖₁ t^{1/2}) ‖φ‖₁`.
pub fn weighted_window_commutator(
    phi: &Field,
    window: &WeightWindow,
    t: f64,
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<WindowCheck> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(HeatError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let n = phi.dim();
    let flow = propagator.propagate(phi, t)?;
    let left = window.apply(&flow.value, cfg)?;
    let weighted = window.apply(phi, cfg)?;
    let right = propagator.propagate(&weighted.value, t)?;
    let diff = left.value.sub(&right.value)?;
    let value = diff.lq_norm(1.0, cfg)?;
    let l1 = phi.lq_norm(1.0, cfg)?;
    let bound = (window.laplacian_sup(n) * t + window.grad_sup(n) * grad_gauss_l1(n) * t.sqrt()) * l1.value;
    let trust = flow
        .trust
        .and(left.trust)
        .and(weighted.trust)
        .and(right.trust)
        .and(value.trust)
        .and(l1.trust);
    Ok(WindowCheck {
        value: value.value,
        bound,
        trusted: trust.is_trusted(),
    })
}

/// `(‖∇w‖_∞, ‖Δw‖_∞)` by direct maximization over the plane spanned by the
/// window axis and one orthogonal direction (the window is radial there).
pub fn window_sups_numeric(window: &WeightWindow, n: usize) -> (f64, f64) {
    let WeightWindow::Coordinate { axis, eps } = *window else {
        return (0.0, 0.0);
    };
    let reach = 8.0 / eps.sqrt();
    let point = |a: f64, b: f64| {
        let mut x = vec![0.0; n];
        x[axis] = a;
        if n > 1 {
            x[(axis + 1) % n] = b;
        }
        x
    };
    let grad = |a: f64, b: f64| window.derivatives(&point(a, b)).0;
    let lap = |a: f64, b: f64| window.derivatives(&point(a, b)).1.abs();
    (
        maximize_plane(grad, reach, n > 1),
        maximize_plane(lap, reach, n > 1),
    )
}

fn maximize_plane(f: impl Fn(f64, f64) -> f64, reach: f64, two_d: bool) -> f64 {
    let samples = 400;
    let h = reach / samples as f64;
    let bs = if two_d { samples } else { 0 };
    let mut best = (0.0, 0.0, f(0.0, 0.0));
    for i in 0..=samples {
        for k in 0..=bs {
            let (a, b) = (i as f64 * h, k as f64 * h);
            let v = f(a, b);
            if v > best.2 {
                best = (a, b, v);
            }
        }
    }
    // coordinate ascent with golden-section line searches
    let (mut a, mut b, mut v) = best;
    let mut width = h;
    for _ in 0..60 {
        let (na, va) = golden_max(|s| f(s, b), (a - width).max(0.0), a + width, 1e-13);
        if va >= v {
            a = na;
            v = va;
        }
        if two_d {
            let (nb, vb) = golden_max(|s| f(a, s), (b - width).max(0.0), b + width, 1e-13);
            if vb >= v {
                b = nb;
                v = vb;
            }
        }
        width *= 0.7;
    }
    v.max(best.2)
}

/// Largest absolute coefficient in an expansion, as `f64`.
pub fn max_abs_coefficient(exp: &CommutatorExpansion) -> f64 {
    exp.terms
        .iter()
        .map(|t| t.coeff.abs())
        .max()
        .unwrap_or_else(Coeff::zero)
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Whether `exp` is the single-term base case `−2t∂_j e^{tΔ}`.
pub fn is_base_case(exp: &CommutatorExpansion) -> bool {
    exp.alpha.order() == 1
        && exp.terms.len() == 1
        && exp.terms[0].coeff == Coeff::from_integer(-2)
        && exp.terms[0].ell == 1
        && exp.terms[0].beta == exp.alpha
        && exp.terms[0].gamma.is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::MixturePropagator;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn term(c: i64, ell: u32, beta: &[u32], gamma: &[u32]) -> CommutatorTerm {
        CommutatorTerm {
            coeff: Coeff::from_integer(c),
            ell,
            beta: mi(beta),
            gamma: mi(gamma),
        }
    }

    #[test]
    fn base_case() {
        let r = build_r_alpha(&mi(&[0, 1])).unwrap();
        assert!(is_base_case(&r));
        assert_eq!(r.terms, vec![term(-2, 1, &[0, 1], &[0, 0])]);
    }

    #[test]
    fn second_order_one_dimension() {
        let r = build_r_alpha(&mi(&[2])).unwrap();
        let mut want = vec![term(-4, 1, &[1], &[1]), term(4, 2, &[2], &[0]), term(2, 1, &[0], &[0])];
        want.sort_by(|a, b| (a.ell, &a.beta, &a.gamma).cmp(&(b.ell, &b.beta, &b.gamma)));
        assert_eq!(r.terms, want);
    }

    #[test]
    fn zero_alpha_rejected() {
        assert!(build_r_alpha(&mi(&[0, 0])).is_err());
    }

    #[test]
    fn classes_hold_low_orders() {
        for n in 1..=2 {
            for k in 1..=4 {
                for a in MultiIndex::of_order(n, k) {
                    build_r_alpha(&a).unwrap().check_classes().unwrap();
                }
            }
        }
    }

    #[test]
    fn json_shape() {
        let r = build_r_alpha(&mi(&[1])).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"alpha":[1],"terms":[{"coeff_num":-2,"coeff_den":1,"ell":1,"beta":[1],"gamma":[0]}]}"#
        );
        let back: CommutatorExpansion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn first_order_on_kernel() {
        // −2t∂G_{1+t} at t = 1 is ½ x G₂
        let phi = Field::Mixture(Mixture::gauss_kernel(1, 1.0));
        let cfg = FieldConfig::default();
        let r = build_r_alpha(&mi(&[1])).unwrap();
        let out = eval_expansion_terms(&r, &phi, 1.0, &MixturePropagator, &cfg).unwrap();
        for x in [-3.0, -0.5, 0.7, 2.2] {
            let g2 = (8.0 * std::f64::consts::PI).powf(-0.5) * (-x * x / 8.0f64).exp();
            assert!((out.value.eval(&[x]) - 0.5 * x * g2).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_expansion_is_zero() {
        let phi = Field::Mixture(Mixture::gauss_kernel(1, 1.0));
        let exp = CommutatorExpansion {
            alpha: mi(&[1]),
            terms: vec![],
        };
        let out = eval_expansion_terms(&exp, &phi, 1.0, &MixturePropagator, &FieldConfig::default()).unwrap();
        assert_eq!(out.value.lq_norm(1.0, &FieldConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn grad_gauss_values() {
        assert!((grad_gauss_l1(1) - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert!((grad_gauss_l1(2) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((grad_gauss_l1(3) - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn laplacian_sup_matches_search() {
        for n in 1..=3 {
            for eps in [1.0, 0.1, 0.01] {
                let w = WeightWindow::coordinate(0, eps).unwrap();
                let (g, l) = window_sups_numeric(&w, n);
                assert!((g - w.grad_sup(n)).abs() < 1e-10, "{g}");
                assert!((l - w.laplacian_sup(n)).abs() < 1e-10, "{l} vs {}", w.laplacian_sup(n));
            }
        }
    }
}
