//! Exact finite sums of polynomial × shifted Gaussian terms.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::{GridField, GridSpec};
use crate::error::{HeatError, Result};
use crate::multi_index::MultiIndex;
use crate::poly::MultiPoly;
use crate::quadrature::{integrate_2d, integrate_breaks, sampled_max, QuadConfig};

/// Largest supported mixture dimension.
pub const MAX_DIM: usize = 8;

/// `coeff · P(x − μ) · G_s(x − μ)`; the polynomial is stored in coordinates
/// relative to the center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub coeff: f64,
    pub poly: MultiPoly,
    pub scale: f64,
    pub center: Vec<f64>,
}

impl GaussianTerm {
    pub fn new(coeff: f64, poly: MultiPoly, scale: f64, center: Vec<f64>) -> Self {
        assert!(scale > 0.0, "Gaussian scale must be positive");
        assert_eq!(poly.dim(), center.len());
        assert!(center.len() <= MAX_DIM, "mixture dimension above {MAX_DIM}");
        GaussianTerm {
            coeff,
            poly,
            scale,
            center,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut y = [0.0f64; MAX_DIM];
        let mut r2 = 0.0;
        for j in 0..n {
            y[j] = x[j] - self.center[j];
            r2 += y[j] * y[j];
        }
        let g = (4.0 * PI * self.scale).powf(-(n as f64) / 2.0) * (-r2 / (4.0 * self.scale)).exp();
        self.coeff * self.poly.eval(&y[..n]) * g
    }

    /// Half-width of the region outside which the term is negligible.
    fn reach(&self) -> f64 {
        self.scale.sqrt() * (12.0 + 1.5 * self.poly.degree() as f64)
    }
}

/// A Gaussian mixture field; the empty mixture is the zero field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    n: usize,
    terms: Vec<GaussianTerm>,
}

/// Gaussian moment `∫ y^k G_s(y) dy` in one dimension.
fn gauss_moment_1d(k: u32, s: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let double_fact: f64 = (1..k).step_by(2).map(|i| i as f64).product();
    (2.0 * s).powi(k as i32 / 2) * double_fact
}

impl Mixture {
    pub fn zero(n: usize) -> Self {
        Mixture { n, terms: Vec::new() }
    }

    /// `c · G_s(x − μ)`.
    pub fn gaussian(c: f64, s: f64, center: Vec<f64>) -> Self {
        let n = center.len();
        Mixture {
            n,
            terms: vec![GaussianTerm::new(c, MultiPoly::constant(n, 1.0), s, center)],
        }
    }

    /// The Gauss kernel `G_s` centered at the origin.
    pub fn gauss_kernel(n: usize, s: f64) -> Self {
        Self::gaussian(1.0, s, vec![0.0; n])
    }

    pub fn from_terms(n: usize, terms: Vec<GaussianTerm>) -> Self {
        assert!(terms.iter().all(|t| t.dim() == n));
        Mixture { n, terms }
    }

    pub fn push(&mut self, term: GaussianTerm) {
        assert_eq!(term.dim(), self.n);
        self.terms.push(term);
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn scaled(&self, c: f64) -> Mixture {
        Mixture {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| GaussianTerm {
                    coeff: t.coeff * c,
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// `self + s · other`, with like terms merged.
    pub fn add_scaled(&self, other: &Mixture, s: f64) -> Mixture {
        let mut terms = self.terms.clone();
        terms.extend(other.scaled(s).terms);
        Mixture { n: self.n, terms }.simplified()
    }

    /// Merge terms sharing scale and center; drop terms whose polynomial vanishes.
    pub fn simplified(&self) -> Mixture {
        let mut groups: BTreeMap<Vec<u64>, (f64, Vec<f64>, MultiPoly)> = BTreeMap::new();
        let mut order: Vec<Vec<u64>> = Vec::new();
        for t in &self.terms {
            let mut key = vec![t.scale.to_bits()];
            key.extend(t.center.iter().map(|c| (c + 0.0).to_bits()));
            let entry = groups.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (t.scale, t.center.clone(), MultiPoly::zero(self.n))
            });
            entry.2.add_scaled(&t.poly, t.coeff);
        }
        let terms = order
            .into_iter()
            .filter_map(|k| {
                let (s, c, p) = groups.remove(&k).expect("group present");
                (!p.is_zero()).then(|| GaussianTerm::new(1.0, p, s, c))
            })
            .collect();
        Mixture { n: self.n, terms }
    }

    /// `x^α · field`.
    pub fn monomial_mul(&self, alpha: &MultiIndex) -> Mixture {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let w = MultiPoly::monomial(alpha.clone(), 1.0).shift(&t.center);
                GaussianTerm {
                    poly: t.poly.mul(&w),
                    ..t.clone()
                }
            })
            .collect();
        Mixture { n: self.n, terms }
    }

    /// `∂^α field`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Mixture {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut p = t.poly.clone();
                for j in 0..self.n {
                    for _ in 0..alpha.get(j) {
                        let mut next = p.derivative(j);
                        next.add_scaled(&p.mul_monomial(&MultiIndex::unit(self.n, j)), -0.5 / t.scale);
                        p = next;
                    }
                }
                GaussianTerm { poly: p, ..t.clone() }
            })
            .filter(|t| !t.poly.is_zero())
            .collect();
        Mixture { n: self.n, terms }
    }

    /// `δ_t field`.
    pub fn dilate(&self, t: f64) -> Mixture {
        let r = t.sqrt();
        let terms = self
            .terms
            .iter()
            .map(|term| GaussianTerm {
                coeff: term.coeff,
                poly: term.poly.scale_vars(1.0 / r),
                scale: term.scale * t,
                center: term.center.iter().map(|c| c * r).collect(),
            })
            .collect();
        Mixture { n: self.n, terms }
    }

    /// `τ_h field`.
    pub fn translate(&self, h: &[f64]) -> Mixture {
        let terms = self
            .terms
            .iter()
            .map(|term| GaussianTerm {
                center: term.center.iter().zip(h).map(|(c, d)| c + d).collect(),
                ..term.clone()
            })
            .collect();
        Mixture { n: self.n, terms }
    }

    /// Multiply by `e^{−ε|x|²}`; the class is closed under this product.
    pub fn gaussian_weight(&self, eps: f64) -> Mixture {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let k = 1.0 + 4.0 * eps * t.scale;
                let s2 = t.scale / k;
                let mu2: Vec<f64> = t.center.iter().map(|c| c / k).collect();
                let mu_sq: f64 = t.center.iter().map(|c| c * c).sum();
                let factor = (s2 / t.scale).powf(self.n as f64 / 2.0) * (-eps * mu_sq / k).exp();
                let d: Vec<f64> = mu2.iter().zip(&t.center).map(|(a, b)| a - b).collect();
                GaussianTerm::new(t.coeff * factor, t.poly.shift(&d), s2, mu2)
            })
            .collect();
        Mixture { n: self.n, terms }
    }

    /// Exact `∫ y^α field(y) dy` from Gaussian moments.
    pub fn signed_moment(&self, alpha: &MultiIndex) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let w = MultiPoly::monomial(alpha.clone(), 1.0).shift(&t.center);
                let p = t.poly.mul(&w);
                let s: f64 = p
                    .coeffs()
                    .iter()
                    .map(|(g, c)| c * g.entries().iter().map(|&k| gauss_moment_1d(k, t.scale)).product::<f64>())
                    .sum();
                t.coeff * s
            })
            .sum()
    }

    /// Per-axis breakpoints covering the effective support.
    pub fn breakpoints(&self, axis: usize) -> Vec<f64> {
        let mut pts: Vec<f64> = Vec::new();
        for t in &self.terms {
            let c = t.center[axis];
            let r = t.reach();
            pts.extend([c - r, c - 0.25 * r, c, c + 0.25 * r, c + r]);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn smallest_width(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.scale.sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// `‖field‖_q` by adaptive quadrature (q finite) or sampled maximization.
    pub fn lq_norm(&self, q: f64, cfg: &QuadConfig) -> Result<f64> {
        if self.terms.is_empty() {
            return Ok(0.0);
        }
        if q.is_infinite() {
            return Ok(self.sup_norm());
        }
        let integrand = |v: f64| if q == 1.0 { v.abs() } else { v.abs().powf(q) };
        let r = match self.n {
            1 => integrate_breaks(|x| integrand(self.eval(&[x])), &self.breakpoints(0), cfg),
            2 => integrate_2d(
                |x, y| integrand(self.eval(&[x, y])),
                &self.breakpoints(0),
                &self.breakpoints(1),
                cfg,
            ),
            n => {
                return Err(HeatError::Unsupported {
                    backend: "mixture".into(),
                    what: format!("quadrature norms in dimension {n}"),
                })
            }
        };
        if !r.converged && r.error > 1e-6 * r.value.abs().max(cfg.abs_tol) {
            return Err(HeatError::QuadratureFailed(format!(
                "L^{q} norm: value {} error {}",
                r.value, r.error
            )));
        }
        Ok(if q == 1.0 { r.value } else { r.value.powf(1.0 / q) })
    }

    fn sup_norm(&self) -> f64 {
        let h = self.smallest_width() / 6.0;
        match self.n {
            1 => {
                let b = self.breakpoints(0);
                let (lo, hi) = (b[0], b[b.len() - 1]);
                let samples = (((hi - lo) / h) as usize).clamp(64, 200_000);
                sampled_max(|x| self.eval(&[x]).abs(), lo, hi, samples)
            }
            _ => self.sup_norm_nd(h),
        }
    }

    /// Sampling on a tensor mesh followed by coordinate-wise golden refinement.
    fn sup_norm_nd(&self, h: f64) -> f64 {
        let n = self.n;
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let b = self.breakpoints(j);
                (b[0], b[b.len() - 1])
            })
            .collect();
        let per_axis: Vec<usize> = bounds
            .iter()
            .map(|(lo, hi)| (((hi - lo) / h) as usize).clamp(16, 400))
            .collect();
        let total: usize = per_axis.iter().product();
        let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut x = vec![0.0; n];
        for idx in 0..total {
            let mut rem = idx;
            for j in 0..n {
                let k = rem % per_axis[j];
                rem /= per_axis[j];
                let (lo, hi) = bounds[j];
                x[j] = lo + (hi - lo) * k as f64 / (per_axis[j] - 1) as f64;
            }
            let v = self.eval(&x).abs();
            if best.len() < 4 || v > best[best.len() - 1].0 {
                best.push((v, x.clone()));
                best.sort_by(|a, b| b.0.total_cmp(&a.0));
                best.truncate(4);
            }
        }
        let mut top = best.first().map(|b| b.0).unwrap_or(0.0);
        for (_, start) in best {
            let mut p = start;
            let mut step: Vec<f64> = bounds
                .iter()
                .zip(&per_axis)
                .map(|((lo, hi), k)| (hi - lo) / (*k - 1) as f64)
                .collect();
            for _ in 0..6 {
                for j in 0..n {
                    let (lo, hi) = (p[j] - step[j], p[j] + step[j]);
                    let mut probe = p.clone();
                    let (xj, _) = crate::quadrature::golden_max(
                        |s| {
                            probe[j] = s;
                            self.eval(&probe).abs()
                        },
                        lo,
                        hi,
                        1e-11 * (1.0 + step[j]),
                    );
                    p[j] = xj;
                }
                for s in step.iter_mut() {
                    *s *= 0.5;
                }
            }
            top = top.max(self.eval(&p).abs());
        }
        top
    }

    /// `‖x^α field‖₁`.
    pub fn weighted_l1_moment(&self, alpha: &MultiIndex, cfg: &QuadConfig) -> Result<f64> {
        self.monomial_mul(alpha).lq_norm(1.0, cfg)
    }

    /// Exact sampling at the nodes of `spec`.
    pub fn to_grid(&self, spec: &GridSpec) -> GridField {
        GridField::from_fn(spec.clone(), |x| self.eval(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn gaussian_moments() {
        let g = Mixture::gauss_kernel(1, 1.0);
        assert!((g.signed_moment(&mi(&[0])) - 1.0).abs() < 1e-15);
        assert_eq!(g.signed_moment(&mi(&[1])), 0.0);
        assert!((g.signed_moment(&mi(&[2])) - 2.0).abs() < 1e-15);
        let shifted = g.translate(&[3.0]);
        assert!((shifted.signed_moment(&mi(&[1])) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_kernel() {
        let g = Mixture::gauss_kernel(1, 1.0);
        let d = g.derivative(&mi(&[1]));
        for x in [-1.3, 0.2, 2.5] {
            let want = -(x / 2.0) * g.eval(&[x]);
            assert!((d.eval(&[x]) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_weight_pointwise() {
        let mut m = Mixture::gaussian(0.7, 0.8, vec![1.1, -0.4]);
        m = m.monomial_mul(&mi(&[1, 2]));
        let w = m.gaussian_weight(0.3);
        for x in [[0.0, 0.0], [1.5, -0.2], [-2.0, 1.0]] {
            let want = m.eval(&x) * (-0.3 * (x[0] * x[0] + x[1] * x[1])).exp();
            assert!((w.eval(&x) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn norms_of_kernel() {
        let g = Mixture::gauss_kernel(1, 1.0);
        let cfg = QuadConfig::default();
        assert!((g.lq_norm(1.0, &cfg).unwrap() - 1.0).abs() < 1e-12);
        let linf = g.lq_norm(f64::INFINITY, &cfg).unwrap();
        assert!((linf - (4.0 * PI).powf(-0.5)).abs() < 1e-14);
        let g2 = Mixture::gauss_kernel(2, 1.0);
        assert!((g2.lq_norm(1.0, &cfg).unwrap() - 1.0).abs() < 1e-10);
        let linf2 = g2.lq_norm(f64::INFINITY, &cfg).unwrap();
        assert!((linf2 - 1.0 / (4.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn simplify_cancels() {
        let g = Mixture::gauss_kernel(1, 2.0);
        assert!(g.add_scaled(&g, -1.0).is_zero());
    }
}
