//! Globally adaptive Gauss-Kronrod (G7-K15) integration, nested 2D integration
//! and sampled maximization with golden-section refinement.

/// Kronrod abscissae on [0, 1], descending; odd positions are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Three-point Gauss-Legendre rule on [-1, 1].
pub const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
pub const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2000,
        }
    }
}

impl QuadConfig {
    pub fn with_abs(abs_tol: f64) -> Self {
        QuadConfig {
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[i] * s;
        if i % 2 == 1 {
            resg += WG[i / 2] * s;
        }
    }
    let k = resk * h;
    let g = resg * h;
    (k, (k - g).abs())
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> QuadResult {
    integrate_breaks(f, &[a, b], cfg)
}

/// Integrate over `[points[0], points[last]]`, starting with the given subintervals.
/// Points must be nondecreasing; degenerate pieces are skipped.
pub fn integrate_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    cfg: &QuadConfig,
) -> QuadResult {
    let mut pieces: Vec<Piece> = Vec::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = kronrod(&mut f, w[0], w[1]);
            evaluations += 15;
            pieces.push(Piece {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
    }
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        if error <= target || pieces.is_empty() {
            return QuadResult {
                value,
                error,
                converged: true,
                evaluations,
            };
        }
        if pieces.len() >= cfg.max_intervals {
            return QuadResult {
                value,
                error,
                converged: false,
                evaluations,
            };
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| {
                if p.error > acc.1 {
                    (i, p.error)
                } else {
                    acc
                }
            });
        let p = pieces.swap_remove(idx);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval cannot be split further in floating point
            return QuadResult {
                value,
                error,
                converged: false,
                evaluations,
            };
        }
        let (v1, e1) = kronrod(&mut f, p.a, m);
        let (v2, e2) = kronrod(&mut f, m, p.b);
        evaluations += 30;
        pieces.push(Piece {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        pieces.push(Piece {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
    }
}

/// Nested 2D integration over the rectangle spanned by the two break lists.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    xbreaks: &[f64],
    ybreaks: &[f64],
    cfg: &QuadConfig,
) -> QuadResult {
    let width = xbreaks.last().unwrap_or(&0.0) - xbreaks.first().unwrap_or(&0.0);
    let inner = QuadConfig {
        abs_tol: 0.1 * cfg.abs_tol / width.max(1.0),
        rel_tol: 0.1 * cfg.rel_tol,
        max_intervals: cfg.max_intervals,
    };
    let mut inner_ok = true;
    let mut evals = 0;
    let outer = integrate_breaks(
        |x| {
            let r = integrate_breaks(|y| f(x, y), ybreaks, &inner);
            inner_ok &= r.converged;
            evals += r.evaluations;
            r.value
        },
        xbreaks,
        cfg,
    );
    QuadResult {
        value: outer.value,
        error: outer.error,
        converged: outer.converged && inner_ok,
        evaluations: evals,
    }
}

/// Golden-section search for a local maximum of `f` on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    let mut best = (x, fx);
    for cand in [(c, fc), (d, fd)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Maximum of `f` on `[a, b]`: uniform sampling with `samples` points, then
/// golden-section refinement around the best few samples.
pub fn sampled_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, samples: usize) -> f64 {
    let samples = samples.max(3);
    let h = (b - a) / (samples - 1) as f64;
    let vals: Vec<f64> = (0..samples).map(|i| f(a + i as f64 * h)).collect();
    let mut order: Vec<usize> = (0..samples).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let mut best = vals[order[0]];
    for &i in order.iter().take(4) {
        let lo = (a + (i as f64 - 1.0) * h).max(a);
        let hi = (a + (i as f64 + 1.0) * h).min(b);
        let (_, v) = golden_max(&mut f, lo, hi, 1e-10 * (1.0 + h));
        best = best.max(v);
    }
    best
}
