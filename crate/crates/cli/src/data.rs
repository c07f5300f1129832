use heatlab::fields::{GaussianTerm, GridSpec};
use heatlab::poly::MultiPoly;
use heatlab::{GridField, Mixture};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BumpConfig, DataConfig, ExperimentConfig};
use crate::error::CliResult;

/// `0.6 G₁(x − a) + 0.4 G_{1/2}(x − b)` with `a = (1, 0.5)`, `b = (−2, −1)` (first `n` entries).
pub fn asymmetric(n: usize) -> Mixture {
    let a = [1.0, 0.5];
    let b = [-2.0, -1.0];
    Mixture::from_terms(
        n,
        vec![
            GaussianTerm::new(0.6, MultiPoly::constant(n, 1.0), 1.0, a[..n].to_vec()),
            GaussianTerm::new(0.4, MultiPoly::constant(n, 1.0), 0.5, b[..n].to_vec()),
        ],
    )
}

/// `0.6 G_{1/2}(x − 1) + 0.4 G_{1/4}(x + 1/2)` in one dimension. Its first
/// moment dominates the second, so low-order remainder rates show up early.
pub fn two_bump() -> DataConfig {
    let bump = |weight, scale, c| BumpConfig {
        weight,
        scale,
        center: vec![c],
    };
    DataConfig::Mixture {
        terms: vec![bump(0.6, 0.5, 1.0), bump(0.4, 0.25, -0.5)],
        amplitude: 1.0,
    }
}

/// Positive random mixture: weights in `[0.2, 1]`, scales in `[0.3, 2]`, centers in `[−2, 2]ⁿ`,
/// normalized to unit mass.
pub fn random_mixture(n: usize, terms: usize, rng: &mut ChaCha8Rng) -> Mixture {
    let mut raw = Vec::with_capacity(terms);
    let mut total = 0.0;
    for _ in 0..terms {
        let w: f64 = rng.gen_range(0.2..1.0);
        let s: f64 = rng.gen_range(0.3..2.0);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        total += w;
        raw.push((w, s, c));
    }
    Mixture::from_terms(
        n,
        raw.into_iter()
            .map(|(w, s, c)| GaussianTerm::new(w / total, MultiPoly::constant(n, 1.0), s, c))
            .collect(),
    )
}

impl DataConfig {
    pub fn amplitude(&self) -> f64 {
        match self {
            DataConfig::Gaussian { amplitude, .. }
            | DataConfig::Asymmetric { amplitude }
            | DataConfig::RandomMixture { amplitude, .. }
            | DataConfig::Mixture { amplitude, .. }
            | DataConfig::HeavyTail { amplitude, .. } => *amplitude,
        }
    }

    pub fn is_grid_only(&self) -> bool {
        matches!(self, DataConfig::HeavyTail { .. })
    }

    pub fn validate(&self, e: &ExperimentConfig) -> CliResult<()> {
        let a = self.amplitude();
        if !a.is_finite() {
            return Err(e.err(format!("data amplitude must be finite, got {a}")));
        }
        match self {
            DataConfig::Gaussian { scale, center, .. } => {
                if !(*scale > 0.0) {
                    return Err(e.err(format!("gaussian scale must be positive, got {scale}")));
                }
                if let Some(c) = center {
                    if c.len() != e.n {
                        return Err(e.err(format!("gaussian center has {} entries, n = {}", c.len(), e.n)));
                    }
                }
            }
            DataConfig::RandomMixture { count, terms, .. } => {
                if *count == 0 || *terms == 0 {
                    return Err(e.err("random-mixture needs count >= 1 and terms >= 1"));
                }
            }
            DataConfig::HeavyTail { decay, .. } => {
                if !(*decay > e.n as f64) {
                    return Err(e.err(format!("heavy-tail decay must exceed n for integrability, got {decay}")));
                }
            }
            DataConfig::Mixture { terms, .. } => {
                if terms.is_empty() {
                    return Err(e.err("mixture data need at least one term"));
                }
                for b in terms {
                    if b.center.len() != e.n || !(b.scale > 0.0) || !b.weight.is_finite() {
                        return Err(e.err(format!(
                            "mixture term needs a center with n = {} entries, positive scale and finite weight",
                            e.n
                        )));
                    }
                }
            }
            DataConfig::Asymmetric { .. } => {}
        }
        Ok(())
    }

    /// The data family as mixtures (one entry unless random).
    pub fn mixtures(&self, n: usize, seed: u64) -> Option<Vec<Mixture>> {
        let out = match self {
            DataConfig::Gaussian {
                amplitude,
                scale,
                center,
            } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; n]);
                vec![Mixture::gaussian(*amplitude, *scale, c)]
            }
            DataConfig::Asymmetric { amplitude } => vec![asymmetric(n).scaled(*amplitude)],
            DataConfig::RandomMixture {
                count,
                terms,
                amplitude,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..*count)
                    .map(|_| random_mixture(n, *terms, &mut rng).scaled(*amplitude))
                    .collect()
            }
            DataConfig::Mixture { terms, amplitude } => vec![Mixture::from_terms(
                n,
                terms
                    .iter()
                    .map(|b| GaussianTerm::new(amplitude * b.weight, MultiPoly::constant(n, 1.0), b.scale, b.center.clone()))
                    .collect(),
            )],
            DataConfig::HeavyTail { .. } => return None,
        };
        Some(out)
    }

    /// The data family sampled on `spec`.
    pub fn grid_fields(&self, spec: &GridSpec, seed: u64) -> Vec<GridField> {
        match self {
            DataConfig::HeavyTail { decay, amplitude } => {
                let (d, a) = (*decay, *amplitude);
                vec![GridField::from_fn(spec.clone(), move |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    a * (1.0 + r2).powf(-d / 2.0)
                })]
            }
            _ => self
                .mixtures(spec.n, seed)
                .unwrap_or_default()
                .iter()
                .map(|m| m.to_grid(spec))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_family_is_seeded() {
        let d = DataConfig::RandomMixture {
            count: 3,
            terms: 2,
            amplitude: 1.0,
        };
        let a = d.mixtures(1, 7).unwrap();
        let b = d.mixtures(1, 7).unwrap();
        let c = d.mixtures(1, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let z = heatlab::MultiIndex::zero(1);
        for m in &a {
            assert!((m.signed_moment(&z) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_mass() {
        let z = heatlab::MultiIndex::zero(1);
        assert!((asymmetric(1).signed_moment(&z) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn explicit_mixture_from_toml() {
        let text = "[[experiment]]\nname = \"a\"\nkind = \"linear-expansion\"\n[experiment.data]\nkind = \"mixture\"\n\
                    terms = [{ weight = 0.6, scale = 0.5, center = [1.0] }, { weight = 0.4, scale = 0.25, center = [-0.5] }]\n";
        let cfg = crate::SuiteConfig::parse(text).unwrap();
        let e = &cfg.experiments[0];
        assert_eq!(e.data, two_bump());
        e.data.validate(e).unwrap();
        let m = &e.data.mixtures(1, 0).unwrap()[0];
        let z = heatlab::MultiIndex::zero(1);
        assert!((m.signed_moment(&z) - 1.0).abs() < 1e-14);
        assert!((m.signed_moment(&heatlab::MultiIndex::unit(1, 0)) - 0.4).abs() < 1e-14);

        let mut bad = e.clone();
        bad.n = 2;
        assert!(bad.data.validate(&bad).is_err());
    }
}
