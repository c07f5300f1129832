//! Field representations: exact Gaussian mixtures and periodic-grid samples.
//!
//! Every analysis operation accepts a [`Field`], which dispatches to the
//! backend. Grid results carry a [`Trust`] flag derived from the fraction of
//! mass sitting near the truncation boundary.

mod grid;
mod mixture;

pub use grid::{GridField, GridSpec, SpectralPlan};
pub use mixture::{GaussianTerm, Mixture};

use serde::{Deserialize, Serialize};

use crate::error::{HeatError, Result};
use crate::multi_index::MultiIndex;
use crate::quadrature::QuadConfig;

/// Default boundary-mass threshold above which grid results are flagged.
pub const DEFAULT_BOUNDARY_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Trust {
    Trusted,
    Untrusted { boundary_mass: f64 },
}

impl Trust {
    pub fn from_mass(boundary_mass: f64, threshold: f64) -> Trust {
        if boundary_mass > threshold {
            Trust::Untrusted { boundary_mass }
        } else {
            Trust::Trusted
        }
    }

    pub fn is_trusted(&self) -> bool {
        matches!(self, Trust::Trusted)
    }

    /// The weaker of two flags.
    pub fn and(self, other: Trust) -> Trust {
        match (self, other) {
            (Trust::Trusted, t) | (t, Trust::Trusted) => t,
            (Trust::Untrusted { boundary_mass: a }, Trust::Untrusted { boundary_mass: b }) => {
                Trust::Untrusted {
                    boundary_mass: a.max(b),
                }
            }
        }
    }
}

/// A value together with the trust flag of the computation that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub trust: Trust,
}

impl<T> Flagged<T> {
    pub fn trusted(value: T) -> Self {
        Flagged {
            value,
            trust: Trust::Trusted,
        }
    }

    pub fn new(value: T, trust: Trust) -> Self {
        Flagged { value, trust }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Flagged<U> {
        Flagged {
            value: f(self.value),
            trust: self.trust,
        }
    }

    pub fn is_trusted(&self) -> bool {
        self.trust.is_trusted()
    }
}

/// Numerical controls shared by the field operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldConfig {
    pub quad: QuadConfig,
    pub boundary_threshold: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            quad: QuadConfig::default(),
            boundary_threshold: DEFAULT_BOUNDARY_THRESHOLD,
        }
    }
}

/// Either backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum Field {
    Mixture(Mixture),
    Grid(GridField),
}

impl From<Mixture> for Field {
    fn from(m: Mixture) -> Self {
        Field::Mixture(m)
    }
}

impl From<GridField> for Field {
    fn from(g: GridField) -> Self {
        Field::Grid(g)
    }
}

impl Field {
    pub fn dim(&self) -> usize {
        match self {
            Field::Mixture(m) => m.dim(),
            Field::Grid(g) => g.spec().n,
        }
    }

    pub fn backend_name(&self) -> &'static str {
        match self {
            Field::Mixture(_) => "mixture",
            Field::Grid(_) => "grid",
        }
    }

    pub fn as_mixture(&self) -> Option<&Mixture> {
        match self {
            Field::Mixture(m) => Some(m),
            Field::Grid(_) => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridField> {
        match self {
            Field::Grid(g) => Some(g),
            Field::Mixture(_) => None,
        }
    }

    /// Trust flag intrinsic to the field (mixtures are always trusted).
    pub fn trust(&self, cfg: &FieldConfig) -> Trust {
        match self {
            Field::Mixture(_) => Trust::Trusted,
            Field::Grid(g) => Trust::from_mass(g.boundary_mass(), cfg.boundary_threshold),
        }
    }

    /// `‖field‖_q`, with `q = f64::INFINITY` for the sup norm.
    pub fn lq_norm(&self, q: f64, cfg: &FieldConfig) -> Result<Flagged<f64>> {
        check_q(q)?;
        match self {
            Field::Mixture(m) => Ok(Flagged::trusted(m.lq_norm(q, &cfg.quad)?)),
            Field::Grid(g) => Ok(g.lq_norm(q, cfg.boundary_threshold)),
        }
    }

    /// `‖x^α field‖₁`.
    pub fn weighted_l1_moment(&self, alpha: &MultiIndex, cfg: &FieldConfig) -> Result<Flagged<f64>> {
        self.check_index(alpha)?;
        match self {
            Field::Mixture(m) => Ok(Flagged::trusted(m.weighted_l1_moment(alpha, &cfg.quad)?)),
            Field::Grid(g) => Ok(g.weighted_l1_moment(alpha, cfg.boundary_threshold)),
        }
    }

    /// `∫ y^α field(y) dy`.
    pub fn signed_moment(&self, alpha: &MultiIndex, cfg: &FieldConfig) -> Result<Flagged<f64>> {
        self.check_index(alpha)?;
        match self {
            Field::Mixture(m) => Ok(Flagged::trusted(m.signed_moment(alpha))),
            Field::Grid(g) => Ok(g.signed_moment(alpha, cfg.boundary_threshold)),
        }
    }

    /// `δ_t field`.
    pub fn dilate(&self, t: f64, cfg: &FieldConfig) -> Result<Flagged<Field>> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(HeatError::InvalidArgument(format!("dilation factor must be positive, got {t}")));
        }
        match self {
            Field::Mixture(m) => Ok(Flagged::trusted(Field::Mixture(m.dilate(t)))),
            Field::Grid(g) => Ok(g.dilate(t, cfg.boundary_threshold).map(Field::Grid)),
        }
    }

    /// `τ_h field`.
    pub fn translate(&self, h: &[f64], cfg: &FieldConfig) -> Result<Flagged<Field>> {
        if h.len() != self.dim() {
            return Err(HeatError::DimensionMismatch {
                expected: self.dim(),
                got: h.len(),
            });
        }
        match self {
            Field::Mixture(m) => Ok(Flagged::trusted(Field::Mixture(m.translate(h)))),
            Field::Grid(g) => Ok(g.translate(h, cfg.boundary_threshold).map(Field::Grid)),
        }
    }

    /// `x^α · field`.
    pub fn monomial_mul(&self, alpha: &MultiIndex, cfg: &FieldConfig) -> Result<Flagged<Field>> {
        self.check_index(alpha)?;
        match self {
            Field::Mixture(m) => Ok(Flagged::trusted(Field::Mixture(m.monomial_mul(alpha)))),
            Field::Grid(g) => {
                let out = g.monomial_mul(alpha);
                let trust = Trust::from_mass(out.boundary_mass(), cfg.boundary_threshold);
                Ok(Flagged::new(Field::Grid(out), trust))
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        match self {
            Field::Mixture(m) => Field::Mixture(m.scaled(c)),
            Field::Grid(g) => Field::Grid(g.scaled(c)),
        }
    }

    /// `self − other`; both fields must use the same backend (and grid spec).
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.combine(other, -1.0)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.combine(other, 1.0)
    }

    fn combine(&self, other: &Field, s: f64) -> Result<Field> {
        match (self, other) {
            (Field::Mixture(a), Field::Mixture(b)) => Ok(Field::Mixture(a.add_scaled(b, s))),
            (Field::Grid(a), Field::Grid(b)) => Ok(Field::Grid(a.add_scaled(b, s)?)),
            _ => Err(HeatError::InvalidArgument(
                "cannot combine fields from different backends".into(),
            )),
        }
    }

    /// Pointwise value at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Field::Mixture(m) => m.eval(x),
            Field::Grid(g) => g.eval_nearest(x),
        }
    }

    fn check_index(&self, alpha: &MultiIndex) -> Result<()> {
        if alpha.dim() != self.dim() {
            return Err(HeatError::DimensionMismatch {
                expected: self.dim(),
                got: alpha.dim(),
            });
        }
        Ok(())
    }
}

/// `q ∈ [1, ∞]`.
pub fn check_q(q: f64) -> Result<()> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(HeatError::InvalidArgument(format!("q must lie in [1, inf], got {q}")))
    }
}

/// `‖G₁‖_q = (4π)^{−(n/2)(1−1/q)} q^{−n/(2q)}` in closed form.
pub fn gauss_norm_closed_form(n: usize, q: f64) -> f64 {
    let nf = n as f64;
    if q.is_infinite() {
        (4.0 * std::f64::consts::PI).powf(-nf / 2.0)
    } else {
        (4.0 * std::f64::consts::PI).powf(-(nf / 2.0) * (1.0 - 1.0 / q)) * q.powf(-nf / (2.0 * q))
    }
}
