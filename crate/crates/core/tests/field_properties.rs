use heatlab::fields::{gauss_norm_closed_form, GaussianTerm, GridSpec};
use heatlab::poly::MultiPoly;
use heatlab::profiles::{
    build_expansion, eval_expansion, expansion_remainder, expansion_remainder_bound, decay_scale,
    gauss_derivative_profile, h_alpha_exact, hermite_1d_exact, ExpansionProfile,
};
use heatlab::quadrature::QuadConfig;
use heatlab::semigroup::{heat_mixture, MixturePropagator, OraclePropagator, Propagator, SpectralPropagator};
use heatlab::{Field, FieldConfig, Mixture, MultiIndex};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn term_strategy(n: usize) -> impl Strategy<Value = GaussianTerm> {
    (
        -1.0f64..1.0,
        0.3f64..2.0,
        prop::collection::vec(-2.0f64..2.0, n),
        prop::collection::vec(-0.5f64..0.5, n),
    )
        .prop_map(move |(c, s, mu, lin)| {
            let mut p = MultiPoly::constant(n, 1.0);
            for (j, a) in lin.iter().enumerate() {
                p.add_term(MultiIndex::unit(n, j), *a);
            }
            GaussianTerm::new(c, p, s, mu)
        })
}

fn mixture_strategy(n: usize) -> impl Strategy<Value = Mixture> {
    prop::collection::vec(term_strategy(n), 1..=3).prop_map(move |terms| Mixture::from_terms(n, terms))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dilation_is_a_group_action(m in mixture_strategy(1), t in 0.1f64..10.0, s in 0.1f64..10.0, x in -5.0f64..5.0) {
        let a = m.dilate(t).dilate(s);
        let b = m.dilate(t * s);
        let va = a.eval(&[x]);
        prop_assert!((va - b.eval(&[x])).abs() <= 1e-13 * (1.0 + va.abs()));
    }

    #[test]
    fn dilation_keeps_l1_and_mass(m in mixture_strategy(1), t in 0.2f64..5.0) {
        let q = QuadConfig::default();
        let d = m.dilate(t);
        prop_assert!(rel(d.lq_norm(1.0, &q).unwrap(), m.lq_norm(1.0, &q).unwrap()) < 1e-9);
        let z = MultiIndex::zero(1);
        prop_assert!((d.signed_moment(&z) - m.signed_moment(&z)).abs() < 1e-12);
    }

    #[test]
    fn norms_are_homogeneous(m in mixture_strategy(1), c in -5.0f64..5.0, qi in 0usize..3) {
        let q = [1.0, 2.0, f64::INFINITY][qi];
        let cfg = QuadConfig::default();
        let a = m.scaled(c).lq_norm(q, &cfg).unwrap();
        let b = c.abs() * m.lq_norm(q, &cfg).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b));
    }

    #[test]
    fn semigroup_law_and_mass(m in mixture_strategy(1), s in 0.05f64..5.0, t in 0.05f64..5.0, x in -6.0f64..6.0) {
        let a = heat_mixture(&heat_mixture(&m, s), t);
        let b = heat_mixture(&m, s + t);
        prop_assert!((a.eval(&[x]) - b.eval(&[x])).abs() < 1e-13);
        let z = MultiIndex::zero(1);
        prop_assert!((b.signed_moment(&z) - m.signed_moment(&z)).abs() < 1e-12);
    }

    #[test]
    fn heat_flow_commutes_with_dilation(m in mixture_strategy(1), lam in 0.2f64..5.0, t in 0.1f64..3.0, x in -6.0f64..6.0) {
        let a = heat_mixture(&m.dilate(lam), lam * t);
        let b = heat_mixture(&m, t).dilate(lam);
        prop_assert!((a.eval(&[x]) - b.eval(&[x])).abs() < 1e-13);
    }

    #[test]
    fn grid_and_mixture_norms_agree(m in mixture_strategy(1), qi in 0usize..3) {
        let q = [1.0, 2.0, f64::INFINITY][qi];
        let spec = GridSpec::new(1, 40.0, 4096).unwrap();
        // |f| has a kink at sign changes, which the grid sum resolves only to O(dx²)
        let m = if q == 1.0 {
            Mixture::from_terms(1, m.terms().iter().map(|t| GaussianTerm::new(t.coeff.abs(), MultiPoly::constant(1, 1.0), t.scale, t.center.clone())).collect())
        } else {
            m
        };
        let g = Field::Grid(m.to_grid(&spec));
        let cfg = FieldConfig::default();
        let a = g.lq_norm(q, &cfg).unwrap().value;
        let b = Field::Mixture(m.clone()).lq_norm(q, &cfg).unwrap().value;
        // the sup on a grid is only resolved to O(dx²)
        let tol = if q.is_infinite() { 1e-3 } else { 1e-8 };
        prop_assert!(rel(a, b) < tol, "q={} grid {} mixture {}", q, a, b);
        let z = MultiIndex::new(vec![2]);
        let ga = g.signed_moment(&z, &cfg).unwrap().value;
        prop_assert!((ga - m.signed_moment(&z)).abs() < 1e-8 * (1.0 + ga.abs()));
    }

    #[test]
    fn spectral_and_mixture_flows_agree(m in mixture_strategy(1), t in 0.1f64..20.0) {
        let spec = GridSpec::new(1, 60.0, 1024).unwrap();
        let sp = SpectralPropagator::new(Some(spec.clone()));
        let a = sp.propagate(&Field::Mixture(m.clone()), t).unwrap().value;
        let b = heat_mixture(&m, t).to_grid(&spec);
        let g = a.as_grid().unwrap();
        let err = g.values().iter().zip(b.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8, "{}", err);
    }

    #[test]
    fn expansion_reproduces_its_coefficients(c in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mut moments = BTreeMap::new();
        for (k, v) in c.iter().enumerate() {
            // raw moments are α! c_α
            moments.insert(MultiIndex::new(vec![k as u32]), v * [1.0, 1.0, 2.0][k]);
        }
        let p = ExpansionProfile::from_moments(1, 2, moments).unwrap();
        let field = Field::Mixture(eval_expansion(&p, 1.0));
        let back = build_expansion(&field, 2, &FieldConfig::default()).unwrap().value;
        let c_of = |e: &ExpansionProfile, k: u32| e.c_alpha(&MultiIndex::new(vec![k]));
        for k in 0..2u32 {
            prop_assert!((c_of(&back, k) - c_of(&p, k)).abs() < 1e-12);
        }
        // ∫x² c₀G₁ = 2c₀ and ∫x² (c₂/4) h₂G₁ = 2c₂, so the degree-2 coefficient comes back as c₂ + c₀
        prop_assert!((c_of(&back, 2) - (c_of(&p, 2) + c_of(&p, 0))).abs() < 1e-12);
    }
}

#[test]
fn oracle_backend_agrees_with_exact_flow() {
    let m = Mixture::from_terms(
        1,
        vec![
            GaussianTerm::new(0.6, MultiPoly::constant(1, 1.0), 1.0, vec![1.0]),
            GaussianTerm::new(0.4, MultiPoly::constant(1, 1.0), 0.5, vec![-2.0]),
        ],
    );
    let spec = GridSpec::new(1, 16.0, 64).unwrap();
    let oracle = OraclePropagator {
        grid: Some(spec.clone()),
        tolerance: 1e-11,
    };
    let t = 0.7;
    let a = oracle.propagate(&Field::Mixture(m.clone()), t).unwrap().value;
    let b = MixturePropagator.propagate(&Field::Mixture(m), t).unwrap().value;
    for k in 0..spec.points {
        let x = spec.node(k);
        let (u, v) = (a.eval(&[x]), b.eval(&[x]));
        assert!((u - v).abs() < 1e-8, "x={x}: {u} vs {v}");
    }
}

/// `H_k` by Rodrigues: `(−1)^k e^{x²} d^k/dx^k e^{−x²} = P_k` with `P_{k+1} = 2x P_k − P_k'`.
fn rodrigues(k: u32) -> Vec<i128> {
    let mut p = vec![1i128];
    for _ in 0..k {
        let mut next = vec![0i128; p.len() + 1];
        for (d, c) in p.iter().enumerate() {
            next[d + 1] += 2 * c;
            if d > 0 {
                next[d - 1] -= d as i128 * c;
            }
        }
        p = next;
    }
    p
}

#[test]
fn hermite_matches_rodrigues() {
    for k in 0..=8 {
        assert_eq!(hermite_1d_exact(k), rodrigues(k), "k = {k}");
    }
}

#[test]
fn h_alpha_is_a_tensor_product() {
    // h_α(x) = Π H_{α_j}(x_j/2)
    for alpha in MultiIndex::up_to(2, 6) {
        let h = h_alpha_exact(&alpha);
        let (a0, a1) = (alpha.get(0), alpha.get(1));
        let (p0, p1) = (rodrigues(a0), rodrigues(a1));
        for (i, c0) in p0.iter().enumerate() {
            for (j, c1) in p1.iter().enumerate() {
                if *c0 == 0 || *c1 == 0 {
                    continue;
                }
                let key = MultiIndex::new(vec![i as u32, j as u32]);
                // H(x/2) halves the degree-d coefficient d times
                let want = c0 * c1;
                let got = h.get(&key).copied().unwrap_or(0) << (i + j);
                assert_eq!(got, want, "alpha={alpha} key={key}");
            }
        }
    }
}

#[test]
fn derivative_profile_matches_spectral_differentiation() {
    // numerical derivatives of G₁ from its Fourier symbol on a fine periodic grid
    let spec = GridSpec::new(1, 30.0, 512).unwrap();
    let g = Mixture::gauss_kernel(1, 1.0).to_grid(&spec);
    let sp = SpectralPropagator::new(Some(spec.clone()));
    for k in 0..=4u32 {
        let alpha = MultiIndex::new(vec![k]);
        let numeric = sp.apply(&g, &[k], 0.0);
        let exact = gauss_derivative_profile(&alpha);
        for i in 0..spec.points {
            let x = spec.node(i);
            if x.abs() > 10.0 {
                continue;
            }
            let d = (numeric.values()[i] - exact.eval(&[x])).abs();
            assert!(d < 1e-9, "k={k} x={x} diff={d}");
        }
    }
}

#[test]
fn linear_remainder_never_exceeds_its_bound() {
    let phi = Field::Mixture(Mixture::from_terms(
        1,
        vec![
            GaussianTerm::new(0.6, MultiPoly::constant(1, 1.0), 1.0, vec![1.0]),
            GaussianTerm::new(0.4, MultiPoly::constant(1, 1.0), 0.5, vec![-2.0]),
        ],
    ));
    let cfg = FieldConfig::default();
    for m in 0..=2 {
        for q in [1.0, 2.0, f64::INFINITY] {
            for t in [1.0, 10.0, 100.0, 1e3, 1e4] {
                let r = expansion_remainder(&phi, m, t, q, &MixturePropagator, &cfg).unwrap().value;
                let b = expansion_remainder_bound(&phi, m, t, q, &cfg).unwrap().value;
                let lhs = decay_scale(1, q, t) * r;
                assert!(lhs <= (1.0 + 1e-6) * b, "m={m} q={q} t={t}: {lhs} > {b}");
            }
        }
    }
}

#[test]
fn closed_form_kernel_norms() {
    let cfg = QuadConfig::default();
    for q in [1.0, 2.0, 3.0, f64::INFINITY] {
        let g = Mixture::gauss_kernel(1, 1.0);
        assert!(rel(g.lq_norm(q, &cfg).unwrap(), gauss_norm_closed_form(1, q)) < 1e-10);
    }
}
