//! Numerical and symbolic tools for the heat semigroup and the semilinear
//! heat equation `∂_t u − Δu = f(u)` on ℝⁿ.
//!
//! * [`fields`]: exact Gaussian mixtures and periodic-grid samples.
//! * [`profiles`]: Hermite polynomials and the dilated Hermite expansion of `e^{tΔ}φ`.
//! * [`semigroup`]: heat propagators behind a name-keyed registry.
//! * [`commutator`]: symbolic `x^α e^{tΔ} − e^{tΔ} x^α` expansions and weight estimates.
//! * [`semilinear`]: small-data global solutions, corrected data and approximants.
//! * [`analysis`]: decay-rate fits, model selection and regime prediction.

pub mod analysis;
pub mod commutator;
pub mod error;
pub mod fields;
pub mod multi_index;
pub mod poly;
pub mod profiles;
pub mod quadrature;
pub mod semigroup;
pub mod semilinear;

pub use error::{HeatError, Result};
pub use fields::{Field, FieldConfig, Flagged, GridField, GridSpec, Mixture, Trust};
pub use multi_index::MultiIndex;
