use heatlab::analysis::{
    build_report, fit_log_corrected, fit_power, predict_regime, reports_to_csv, DecayModel, Prediction, RegimeForm,
    Run, Series,
};
use heatlab::HeatError;
use proptest::prelude::*;

fn logspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_is_scale_invariant(a in -3.0f64..1.0, c in 1e-6f64..1e6, wobble in 0.0f64..0.2) {
        let t = logspace(1.0, 1e3, 40);
        let y: Vec<f64> = t.iter().map(|v| v.powf(a) * (1.0 + wobble * (v.ln()).sin())).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
        let f1 = fit_power(&t, &y).unwrap();
        let f2 = fit_power(&t, &ys).unwrap();
        prop_assert!((f1.exponent - f2.exponent).abs() < 1e-10);
    }

    #[test]
    fn fit_is_exact_on_powers(a in -3.0f64..2.0, c in 1e-3f64..1e3) {
        let t = logspace(0.5, 5e4, 30);
        let y: Vec<f64> = t.iter().map(|v| c * v.powf(a)).collect();
        let f = fit_power(&t, &y).unwrap();
        prop_assert!((f.exponent - a).abs() < 1e-12);
        prop_assert!((f.log_prefactor - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn pure_powers_never_look_logarithmic(
        a in prop_oneof![-3.0f64..-1.2, -0.8f64..0.0],
        lo in 1.0f64..100.0,
        decades in 2.0f64..4.0,
        noise in 0.0f64..0.01,
        seed in any::<u32>(),
    ) {
        let t = logspace(lo, lo * 10f64.powf(decades), 60);
        let mut s = seed as u64 | 1;
        let y: Vec<f64> = t
            .iter()
            .map(|v| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                v.powf(a) * (1.0 + noise * u)
            })
            .collect();
        let sel = fit_log_corrected(&t, &y).unwrap();
        prop_assert_eq!(sel.model, DecayModel::Power, "a={} score={}", a, sel.score);
    }

    #[test]
    fn regimes_are_total_above_fujita(n in 1usize..=3, dp in 1e-3f64..5.0, level in 1u32..6) {
        let p = 1.0 + 2.0 / n as f64 + dp;
        let r = predict_regime(level, n, p).unwrap();
        let ns = level as f64 * r.sigma;
        match r.form {
            RegimeForm::PowerNSigma { exponent } => prop_assert!(ns < 1.0 && (exponent + ns).abs() < 1e-15),
            RegimeForm::PowerTimesLog => prop_assert!((ns - 1.0).abs() < 1e-9),
            RegimeForm::InverseT => prop_assert!(ns > 1.0),
        }
    }
}

#[test]
fn regime_golden_set() {
    use RegimeForm::*;
    let cases: [(usize, f64, u32, RegimeForm); 12] = [
        (1, 4.0, 1, PowerNSigma { exponent: -0.5 }),
        (1, 4.0, 2, PowerTimesLog),
        (1, 4.0, 3, InverseT),
        (1, 6.0, 1, InverseT),
        (1, 3.5, 1, PowerNSigma { exponent: -0.25 }),
        (1, 3.5, 4, PowerTimesLog),
        (1, 5.0, 1, PowerTimesLog),
        (2, 3.0, 1, PowerTimesLog),
        (2, 2.5, 1, PowerNSigma { exponent: -0.5 }),
        (2, 2.5, 2, PowerTimesLog),
        (2, 2.5, 3, InverseT),
        (2, 4.0, 1, InverseT),
    ];
    for (n, p, level, want) in cases {
        let got = predict_regime(level, n, p).unwrap().form;
        assert_eq!(got, want, "n={n} p={p} N={level}");
    }
    assert!(matches!(predict_regime(1, 1, 3.0), Err(HeatError::SubcriticalExponent { .. })));
    assert!(matches!(predict_regime(1, 2, 1.5), Err(HeatError::SubcriticalExponent { .. })));
}

#[test]
fn log_shape_biases_the_power_fit() {
    let t = logspace(100.0, 1e4, 50);
    let y: Vec<f64> = t.iter().map(|v| v.ln_1p() / v).collect();
    let f = fit_power(&t, &y).unwrap();
    assert!(f.exponent > -1.0 && f.exponent < -0.8, "{}", f.exponent);
    let sel = fit_log_corrected(&t, &y).unwrap();
    assert_eq!(sel.model, DecayModel::PowerTimesLog);
    assert!(sel.log_residual < 1e-20);
}

#[test]
fn report_round_trip() {
    let t = logspace(1.0, 1e4, 60);
    let runs = vec![
        Run {
            series: Series::new("half", t.clone(), t.iter().map(|v| 2.0 * v.powf(-0.5)).collect()),
            prediction: Prediction::Regime(predict_regime(1, 1, 4.0).unwrap()),
            tolerance: 0.1,
            window: None,
        },
        Run {
            series: Series::new("log", t.clone(), t.iter().map(|v| v.ln_1p() / v).collect()),
            prediction: Prediction::Regime(predict_regime(2, 1, 4.0).unwrap()),
            tolerance: 0.1,
            window: None,
        },
        Run {
            series: Series::new("wrong", t.clone(), t.iter().map(|v| v.powf(-0.2)).collect()),
            prediction: Prediction::Exponent { exponent: -1.0 },
            tolerance: 0.1,
            window: None,
        },
    ];
    let reports = build_report(&runs);
    assert_eq!(reports.iter().map(|r| r.pass).collect::<Vec<_>>(), vec![true, true, false]);
    assert!(reports[1].log_selected);
    let csv = reports_to_csv(&reports);
    assert!(csv.starts_with("series_id,exponent,stderr,predicted,regime,pass\n"));
    assert_eq!(csv.lines().count(), 4);
}
