//! Hermite polynomials, the profiles `h_α G₁ = (−2)^{|α|} ∂^α G₁`, and the
//! dilated Hermite expansion of the heat flow
//!
//! ```text
//! e^{tΔ}φ ≈ Σ_{k≤m} 2^{−k} t^{−k/2} Σ_{|α|=k} c_α δ_t(h_α G₁),   c_α = (1/α!) ∫ y^α φ(y) dy.
//! ```

use std::collections::{BTreeMap, HashMap};
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HeatError, Result};
use crate::fields::{Field, FieldConfig, Flagged, GaussianTerm, Mixture, Trust};
use crate::multi_index::{factorial_u128, MultiIndex};
use crate::poly::MultiPoly;
use crate::quadrature::QuadConfig;
use crate::semigroup::Propagator;

/// Dense univariate polynomial, index = degree, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial1D {
    pub coefficients: Vec<f64>,
}

impl Polynomial1D {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Exact integer coefficients of `H_k(x) = Σ_j (−1)^j k!/(j!(k−2j)!) (2x)^{k−2j}`.
pub fn hermite_1d_exact(k: u32) -> Vec<i128> {
    let mut c = vec![0i128; k as usize + 1];
    for j in 0..=k / 2 {
        let num = factorial_u128(k) as i128;
        let den = (factorial_u128(j) * factorial_u128(k - 2 * j)) as i128;
        let sign = if j % 2 == 0 { 1 } else { -1 };
        c[(k - 2 * j) as usize] = sign * (num / den) * (1i128 << (k - 2 * j));
    }
    c
}

pub fn hermite_1d(k: u32) -> Polynomial1D {
    Polynomial1D {
        coefficients: hermite_1d_exact(k).into_iter().map(|v| v as f64).collect(),
    }
}

/// Exact coefficients of `h_α(x) = H_α(x/2) = Σ_{2β≤α} (−1)^{|β|} α!/(β!(α−2β)!) x^{α−2β}`.
pub fn h_alpha_exact(alpha: &MultiIndex) -> BTreeMap<MultiIndex, i128> {
    let mut out = BTreeMap::new();
    let half = MultiIndex::new(alpha.entries().iter().map(|a| a / 2).collect());
    for beta in half.below() {
        let rest = alpha.checked_sub(&beta.scale(2)).expect("2β ≤ α");
        let num = alpha.factorial_exact() as i128;
        let den = (beta.factorial_exact() * rest.factorial_exact()) as i128;
        let sign = if beta.order() % 2 == 0 { 1 } else { -1 };
        out.insert(rest, sign * num / den);
    }
    out
}

pub fn h_alpha(alpha: &MultiIndex) -> MultiPoly {
    MultiPoly::from_terms(
        alpha.dim(),
        h_alpha_exact(alpha).into_iter().map(|(g, c)| (g, c as f64)),
    )
}

/// Inverse relation `x^γ = Σ_{2β≤γ} γ!/(β!(γ−2β)!) h_{γ−2β}(x)`.
pub fn monomial_in_hermite_basis(gamma: &MultiIndex) -> Vec<(MultiIndex, f64)> {
    let half = MultiIndex::new(gamma.entries().iter().map(|a| a / 2).collect());
    half.below()
        .into_iter()
        .map(|beta| {
            let rest = gamma.checked_sub(&beta.scale(2)).expect("2β ≤ γ");
            let w = gamma.factorial_exact() as f64
                / (beta.factorial_exact() as f64 * rest.factorial_exact() as f64);
            (rest, w)
        })
        .collect()
}

/// `∂^α G₁ = (−2)^{−|α|} h_α G₁` as a mixture.
pub fn gauss_derivative_profile(alpha: &MultiIndex) -> Mixture {
    let n = alpha.dim();
    let c = (-2.0f64).powi(-(alpha.order() as i32));
    Mixture::from_terms(n, vec![GaussianTerm::new(c, h_alpha(alpha), 1.0, vec![0.0; n])])
}

fn profile_cache() -> &'static RwLock<HashMap<(MultiIndex, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(MultiIndex, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `‖h_α G₁‖_q`, cached. The profile is a tensor product, so the norm is the
/// product of one-dimensional norms, each computed by adaptive quadrature.
pub fn profile_norm(alpha: &MultiIndex, q: f64) -> Result<f64> {
    crate::fields::check_q(q)?;
    let key = (alpha.clone(), q.to_bits());
    if let Some(v) = profile_cache().read().expect("cache poisoned").get(&key) {
        return Ok(*v);
    }
    let cfg = QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let mut value = 1.0;
    for &k in alpha.entries() {
        let m = Mixture::from_terms(
            1,
            vec![GaussianTerm::new(1.0, h_alpha(&MultiIndex::new(vec![k])), 1.0, vec![0.0])],
        );
        value *= m.lq_norm(q, &cfg)?;
    }
    profile_cache()
        .write()
        .expect("cache poisoned")
        .insert(key, value);
    Ok(value)
}

/// Coefficients of the Hermite expansion. Raw moments `∫ y^α φ` are kept
/// alongside `α!` so both normalizations are available.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionProfile {
    pub n: usize,
    pub m: u32,
    moments: BTreeMap<MultiIndex, f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileEntry {
    alpha: MultiIndex,
    c_alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    n: usize,
    m: u32,
    entries: Vec<ProfileEntry>,
}

impl Serialize for ExpansionProfile {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProfileRepr {
            n: self.n,
            m: self.m,
            entries: self
                .moments
                .keys()
                .map(|a| ProfileEntry {
                    alpha: a.clone(),
                    c_alpha: self.c_alpha(a),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExpansionProfile {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ProfileRepr::deserialize(d)?;
        let moments = r
            .entries
            .into_iter()
            .map(|e| {
                let f = e.alpha.factorial();
                (e.alpha, e.c_alpha * f)
            })
            .collect();
        Ok(ExpansionProfile {
            n: r.n,
            m: r.m,
            moments,
        })
    }
}

impl ExpansionProfile {
    /// Profile from raw moments `∫ y^α φ` for all `|α| ≤ m`.
    pub fn from_moments(n: usize, m: u32, moments: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        for a in MultiIndex::up_to(n, m) {
            if !moments.contains_key(&a) {
                return Err(HeatError::InvalidArgument(format!("missing moment for α = {a}")));
            }
        }
        Ok(ExpansionProfile { n, m, moments })
    }

    /// `c_α = (1/α!) ∫ y^α φ`.
    pub fn c_alpha(&self, alpha: &MultiIndex) -> f64 {
        self.raw_moment(alpha) / alpha.factorial()
    }

    /// `∫ y^α φ` without the factorial.
    pub fn raw_moment(&self, alpha: &MultiIndex) -> f64 {
        self.moments.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn indices(&self) -> impl Iterator<Item = &MultiIndex> {
        self.moments.keys()
    }
}

/// `c_α` for all `|α| ≤ m` from signed moments of `φ`.
pub fn build_expansion(phi: &Field, m: u32, cfg: &FieldConfig) -> Result<Flagged<ExpansionProfile>> {
    let n = phi.dim();
    let mut trust = Trust::Trusted;
    let mut moments = BTreeMap::new();
    for a in MultiIndex::up_to(n, m) {
        let mo = phi.signed_moment(&a, cfg)?;
        trust = trust.and(mo.trust);
        moments.insert(a, mo.value);
    }
    Ok(Flagged::new(ExpansionProfile { n, m, moments }, trust))
}

/// `Σ_{k≤m} 2^{−k} t^{−k/2} Σ_{|α|=k} c_α δ_t(h_α G₁)` as a mixture.
pub fn eval_expansion(profile: &ExpansionProfile, t: f64) -> Mixture {
    let n = profile.n;
    let mut poly = MultiPoly::zero(n);
    for a in profile.indices() {
        let k = a.order() as i32;
        let c = profile.c_alpha(a) * 2f64.powi(-k) * t.powf(-(k as f64) / 2.0);
        if c != 0.0 {
            // δ_t(h_α G₁)(x) = h_α(x/√t) G_t(x)
            poly.add_scaled(&h_alpha(a).scale_vars(1.0 / t.sqrt()), c);
        }
    }
    if poly.is_zero() {
        return Mixture::zero(n);
    }
    Mixture::from_terms(n, vec![GaussianTerm::new(1.0, poly, t, vec![0.0; n])])
}

/// `‖e^{tΔ}φ − eval_expansion(build_expansion(φ, m), t)‖_q`.
pub fn expansion_remainder(
    phi: &Field,
    m: u32,
    t: f64,
    q: f64,
    propagator: &dyn Propagator,
    cfg: &FieldConfig,
) -> Result<Flagged<f64>> {
    if !(t > 0.0) {
        return Err(HeatError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let profile = build_expansion(phi, m, cfg)?;
    let flow = propagator.propagate(phi, t)?;
    let approx = eval_expansion(&profile.value, t);
    let diff = match &flow.value {
        Field::Mixture(u) => Field::Mixture(u.add_scaled(&approx, -1.0)),
        Field::Grid(u) => Field::Grid(u.add_scaled(&approx.to_grid(u.spec()), -1.0)?),
    };
    let norm = diff.lq_norm(q, cfg)?;
    Ok(Flagged::new(
        norm.value,
        profile.trust.and(flow.trust).and(norm.trust),
    ))
}

/// `t^{(n/2)(1−1/q)}` normalization used by scaled remainders.
pub fn decay_scale(n: usize, q: f64, t: f64) -> f64 {
    let e = if q.is_infinite() { 1.0 } else { 1.0 - 1.0 / q };
    t.powf(n as f64 / 2.0 * e)
}

/// Right-hand side of the scaled remainder bound:
/// `2^{−(m+1)} t^{−(m+1)/2} Σ_{|α|=m+1} (1/α!) ‖h_α G₁‖_q ‖x^α φ‖₁`.
pub fn expansion_remainder_bound(
    phi: &Field,
    m: u32,
    t: f64,
    q: f64,
    cfg: &FieldConfig,
) -> Result<Flagged<f64>> {
    let n = phi.dim();
    let mut trust = Trust::Trusted;
    let mut sum = 0.0;
    for a in MultiIndex::of_order(n, m + 1) {
        let w = phi.weighted_l1_moment(&a, cfg)?;
        trust = trust.and(w.trust);
        sum += profile_norm(&a, q)? * w.value / a.factorial();
    }
    let k = (m + 1) as f64;
    Ok(Flagged::new(2f64.powf(-k) * t.powf(-k / 2.0) * sum, trust))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn low_order_hermite() {
        assert_eq!(hermite_1d_exact(0), vec![1]);
        assert_eq!(hermite_1d_exact(1), vec![0, 2]);
        assert_eq!(hermite_1d_exact(3), vec![0, -12, 0, 8]);
        assert_eq!(hermite_1d(4).degree(), 4);
    }

    #[test]
    fn h_alpha_examples() {
        let h2 = h_alpha(&mi(&[2]));
        assert_eq!(h2.coeff(&mi(&[2])), 1.0);
        assert_eq!(h2.coeff(&mi(&[0])), -2.0);
        let h11 = h_alpha(&mi(&[1, 1]));
        assert_eq!(h11.coeffs().len(), 1);
        assert_eq!(h11.coeff(&mi(&[1, 1])), 1.0);
    }

    #[test]
    fn inverse_relation_roundtrip() {
        for k in 0..8u32 {
            let mut p = MultiPoly::zero(1);
            for (g, w) in monomial_in_hermite_basis(&mi(&[k])) {
                p.add_scaled(&h_alpha(&g), w);
            }
            assert_eq!(p, MultiPoly::monomial(mi(&[k]), 1.0), "k = {k}");
        }
    }

    #[test]
    fn profile_norm_values() {
        assert!((profile_norm(&mi(&[0]), 1.0).unwrap() - 1.0).abs() < 1e-12);
        let want = 4.0 / (4.0 * std::f64::consts::PI).sqrt();
        assert!((profile_norm(&mi(&[1]), 1.0).unwrap() - want).abs() < 1e-12);
        let sup = profile_norm(&mi(&[0]), f64::INFINITY).unwrap();
        assert!((sup - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn expansion_of_first_order_data() {
        let mut m = BTreeMap::new();
        m.insert(mi(&[0]), 1.0);
        m.insert(mi(&[1]), 1.0);
        let p = ExpansionProfile::from_moments(1, 1, m).unwrap();
        let e = eval_expansion(&p, 1.0);
        let g1 = Mixture::gauss_kernel(1, 1.0);
        for x in [-2.0, 0.3, 1.7] {
            let want = g1.eval(&[x]) * (1.0 + 0.5 * x);
            assert!((e.eval(&[x]) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_json_format() {
        let mut m = BTreeMap::new();
        m.insert(mi(&[0]), 1.0);
        m.insert(mi(&[1]), 0.0);
        m.insert(mi(&[2]), 2.0);
        let p = ExpansionProfile::from_moments(1, 2, m).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"n":1,"m":2,"entries":[{"alpha":[0],"c_alpha":1.0},{"alpha":[1],"c_alpha":0.0},{"alpha":[2],"c_alpha":1.0}]}"#
        );
        let back: ExpansionProfile = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
