//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::multi_index::MultiIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolyRepr", from = "PolyRepr")]
pub struct MultiPoly {
    n: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

/// Wire form: JSON maps need string keys, so terms are listed.
#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n: usize,
    terms: Vec<(MultiIndex, f64)>,
}

impl From<MultiPoly> for PolyRepr {
    fn from(p: MultiPoly) -> Self {
        PolyRepr {
            n: p.n,
            terms: p.coeffs.into_iter().collect(),
        }
    }
}

impl From<PolyRepr> for MultiPoly {
    fn from(r: PolyRepr) -> Self {
        MultiPoly::from_terms(r.n, r.terms)
    }
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        MultiPoly {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(MultiIndex::zero(n), c)
    }

    pub fn monomial(alpha: MultiIndex, c: f64) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        let mut p = Self::zero(n);
        for (a, c) in terms {
            p.add_term(a, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|a| a.order()).max().unwrap_or(0)
    }

    /// Add `c·x^α`, dropping the entry if it cancels exactly.
    pub fn add_term(&mut self, alpha: MultiIndex, c: f64) {
        debug_assert_eq!(alpha.dim(), self.n);
        if c == 0.0 {
            return;
        }
        match self.coeffs.get_mut(&alpha) {
            Some(e) => {
                *e += c;
                if *e == 0.0 {
                    self.coeffs.remove(&alpha);
                }
            }
            None => {
                self.coeffs.insert(alpha, c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &MultiPoly, s: f64) {
        for (a, c) in &other.coeffs {
            self.add_term(a.clone(), s * c);
        }
    }

    pub fn scaled(&self, s: f64) -> MultiPoly {
        let mut p = MultiPoly::zero(self.n);
        p.add_scaled(self, s);
        p
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        let mut p = MultiPoly::zero(self.n);
        for (a, c) in &self.coeffs {
            for (b, d) in &other.coeffs {
                p.add_term(a.add(b), c * d);
            }
        }
        p
    }

    /// Multiply by `x^α`.
    pub fn mul_monomial(&self, alpha: &MultiIndex) -> MultiPoly {
        MultiPoly {
            n: self.n,
            coeffs: self.coeffs.iter().map(|(a, c)| (a.add(alpha), *c)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(a, c)| c * a.monomial(x)).sum()
    }

    /// `y ↦ P(λ y)`.
    pub fn scale_vars(&self, lambda: f64) -> MultiPoly {
        MultiPoly {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, c)| (a.clone(), c * lambda.powi(a.order() as i32)))
                .collect(),
        }
    }

    /// `y ↦ P(y + d)`.
    pub fn shift(&self, d: &[f64]) -> MultiPoly {
        if d.iter().all(|&v| v == 0.0) {
            return self.clone();
        }
        let mut p = MultiPoly::zero(self.n);
        for (gamma, c) in &self.coeffs {
            for beta in gamma.below() {
                let rest = gamma.checked_sub(&beta).expect("beta below gamma");
                let w = gamma.binomial(&beta) as f64 * rest.monomial(d);
                p.add_term(beta, c * w);
            }
        }
        p
    }

    /// `∂_j P`.
    pub fn derivative(&self, j: usize) -> MultiPoly {
        let mut p = MultiPoly::zero(self.n);
        for (a, c) in &self.coeffs {
            if let Some(b) = a.minus_unit(j) {
                p.add_term(b, c * a.get(j) as f64);
            }
        }
        p
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}
