//! Sampled fields on a periodic box `[−L, L)ⁿ` approximating ℝⁿ.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{Flagged, Trust};
use crate::error::{HeatError, Result};
use crate::multi_index::MultiIndex;

/// Origin-centered uniform mesh with `points` nodes per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, points: usize) -> Result<Self> {
        let spec = GridSpec {
            n,
            half_width,
            points,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n == 1 || self.n == 2) {
            return Err(HeatError::InvalidArgument(format!(
                "grid dimension must be 1 or 2, got {}",
                self.n
            )));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(HeatError::InvalidArgument(format!(
                "grid half-width must be positive, got {}",
                self.half_width
            )));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(HeatError::InvalidArgument(format!(
                "points per axis must be a power of two >= 8, got {}",
                self.points
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Total number of nodes `Nⁿ`.
    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.dx()
    }

    /// Coordinates of the flat index `idx` (row-major, axis 0 slowest).
    pub fn coords(&self, idx: usize, out: &mut [f64]) {
        match self.n {
            1 => out[0] = self.node(idx),
            _ => {
                out[0] = self.node(idx / self.points);
                out[1] = self.node(idx % self.points);
            }
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    /// Resolution-doubled spec on the same box.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            points: self.points * 2,
            ..self.clone()
        }
    }

    fn in_shell(&self, x: &[f64]) -> bool {
        x.iter().any(|v| v.abs() > 0.9 * self.half_width)
    }
}

/// A real field sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    spec: GridSpec,
    values: Vec<f64>,
    boundary_mass: f64,
}

impl GridField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(HeatError::InvalidArgument(format!(
                "expected {} grid values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HeatError::InvalidArgument("grid values must be finite".into()));
        }
        Ok(Self::from_values(spec, values))
    }

    pub(crate) fn from_values(spec: GridSpec, values: Vec<f64>) -> Self {
        let boundary_mass = boundary_mass(&spec, &values);
        GridField {
            spec,
            values,
            boundary_mass,
        }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        let len = spec.len();
        Self::from_values(spec, vec![0.0; len])
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = [0.0; 2];
        let values = (0..spec.len())
            .map(|i| {
                spec.coords(i, &mut x);
                f(&x[..spec.n])
            })
            .collect();
        Self::from_values(spec, values)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Fraction of `|field|` mass in the outer 10% shell.
    pub fn boundary_mass(&self) -> f64 {
        self.boundary_mass
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        Self::from_values(self.spec.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> GridField {
        self.map(|v| c * v)
    }

    pub fn add_scaled(&self, other: &GridField, s: f64) -> Result<GridField> {
        if self.spec != other.spec {
            return Err(HeatError::InvalidArgument("grid specs differ".into()));
        }
        Ok(Self::from_values(
            self.spec.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        ))
    }

    fn flag(&self, threshold: f64) -> Trust {
        Trust::from_mass(self.boundary_mass, threshold)
    }

    /// Riemann sum (q finite) or node maximum (q = ∞).
    pub fn lq_norm(&self, q: f64, threshold: f64) -> Flagged<f64> {
        let value = if q.is_infinite() {
            self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else if q == 1.0 {
            self.values.iter().map(|v| v.abs()).sum::<f64>() * self.spec.cell_volume()
        } else {
            (self.values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * self.spec.cell_volume())
                .powf(1.0 / q)
        };
        Flagged::new(value, self.flag(threshold))
    }

    pub fn weighted_l1_moment(&self, alpha: &MultiIndex, threshold: f64) -> Flagged<f64> {
        let weighted = self.monomial_mul(alpha);
        let value = weighted.values.iter().map(|v| v.abs()).sum::<f64>() * self.spec.cell_volume();
        Flagged::new(value, self.flag(threshold).and(weighted.flag(threshold)))
    }

    pub fn signed_moment(&self, alpha: &MultiIndex, threshold: f64) -> Flagged<f64> {
        let weighted = self.monomial_mul(alpha);
        let value = weighted.values.iter().sum::<f64>() * self.spec.cell_volume();
        Flagged::new(value, self.flag(threshold).and(weighted.flag(threshold)))
    }

    pub fn monomial_mul(&self, alpha: &MultiIndex) -> GridField {
        let mut x = [0.0; 2];
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                self.spec.coords(i, &mut x);
                v * alpha.monomial(&x[..self.spec.n])
            })
            .collect();
        Self::from_values(self.spec.clone(), values)
    }

    /// Spectral phase shift; flagged when the shift is large or mass wraps.
    pub fn translate(&self, h: &[f64], threshold: f64) -> Flagged<GridField> {
        if h.iter().all(|&v| v == 0.0) {
            return Flagged::new(self.clone(), self.flag(threshold));
        }
        let plan = SpectralPlan::for_spec(&self.spec);
        let values = plan.apply_symbol(&self.values, |xi, _| {
            let phase: f64 = xi.iter().zip(h).map(|(k, d)| -k * d).sum();
            Complex64::from_polar(1.0, phase)
        });
        let out = Self::from_values(self.spec.clone(), values);
        let mut trust = self.flag(threshold).and(out.flag(threshold));
        if h.iter().any(|d| d.abs() > 0.5 * self.spec.half_width) {
            trust = trust.and(Trust::Untrusted {
                boundary_mass: out.boundary_mass.max(threshold * 2.0),
            });
        }
        Flagged::new(out, trust)
    }

    /// `δ_t` by six-point Lagrange interpolation; samples outside the box are zero.
    pub fn dilate(&self, t: f64, threshold: f64) -> Flagged<GridField> {
        let r = t.sqrt();
        let inv = 1.0 / r;
        let scale = t.powf(-(self.spec.n as f64) / 2.0);
        let mut x = [0.0; 2];
        let values: Vec<f64> = (0..self.spec.len())
            .map(|i| {
                self.spec.coords(i, &mut x);
                let y: Vec<f64> = x[..self.spec.n].iter().map(|v| v * inv).collect();
                scale * self.interpolate(&y)
            })
            .collect();
        let out = Self::from_values(self.spec.clone(), values);
        // mass of the source that maps outside the box
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        let mut lost = 0.0;
        if r > 1.0 && total > 0.0 {
            for (i, v) in self.values.iter().enumerate() {
                self.spec.coords(i, &mut x);
                if x[..self.spec.n].iter().any(|c| (c * r).abs() >= self.spec.half_width) {
                    lost += v.abs();
                }
            }
            lost /= total;
        }
        let trust = Trust::from_mass(out.boundary_mass.max(lost), threshold);
        Flagged::new(out, trust)
    }

    /// Six-point Lagrange interpolation at an arbitrary point (zero outside the box).
    pub fn interpolate(&self, y: &[f64]) -> f64 {
        let dx = self.spec.dx();
        let np = self.spec.points as isize;
        let mut idx = [[0isize; 6]; 2];
        let mut wts = [[0.0f64; 6]; 2];
        for (j, &yj) in y.iter().enumerate() {
            let u = (yj + self.spec.half_width) / dx;
            let k0 = u.floor() as isize;
            let frac = u - k0 as f64;
            for m in 0..6 {
                idx[j][m] = k0 - 2 + m as isize;
                let xm = m as f64 - 2.0;
                let mut w = 1.0;
                for l in 0..6 {
                    if l != m {
                        let xl = l as f64 - 2.0;
                        w *= (frac - xl) / (xm - xl);
                    }
                }
                wts[j][m] = w;
            }
        }
        let inside = |k: isize| k >= 0 && k < np;
        match self.spec.n {
            1 => (0..6)
                .filter(|&m| inside(idx[0][m]))
                .map(|m| wts[0][m] * self.values[idx[0][m] as usize])
                .sum(),
            _ => {
                let mut s = 0.0;
                for a in 0..6 {
                    if !inside(idx[0][a]) {
                        continue;
                    }
                    for b in 0..6 {
                        if !inside(idx[1][b]) {
                            continue;
                        }
                        let flat = idx[0][a] as usize * self.spec.points + idx[1][b] as usize;
                        s += wts[0][a] * wts[1][b] * self.values[flat];
                    }
                }
                s
            }
        }
    }

    /// Value at the node nearest to `x`.
    pub fn eval_nearest(&self, x: &[f64]) -> f64 {
        let k = |v: f64| {
            (((v + self.spec.half_width) / self.spec.dx()).round() as isize)
                .clamp(0, self.spec.points as isize - 1) as usize
        };
        match self.spec.n {
            1 => self.values[k(x[0])],
            _ => self.values[k(x[0]) * self.spec.points + k(x[1])],
        }
    }
}

fn boundary_mass(spec: &GridSpec, values: &[f64]) -> f64 {
    let mut x = [0.0; 2];
    let mut total = 0.0;
    let mut shell = 0.0;
    for (i, v) in values.iter().enumerate() {
        spec.coords(i, &mut x);
        total += v.abs();
        if spec.in_shell(&x[..spec.n]) {
            shell += v.abs();
        }
    }
    if total > 0.0 {
        shell / total
    } else {
        0.0
    }
}

/// Cached FFT plans and wavenumbers for one grid geometry.
pub struct SpectralPlan {
    n: usize,
    points: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    xi: Vec<f64>,
}

type PlanKey = (usize, usize, u64);

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, Arc<SpectralPlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<SpectralPlan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl SpectralPlan {
    /// Shared plan for `spec`; plans are immutable and reentrant.
    pub fn for_spec(spec: &GridSpec) -> Arc<SpectralPlan> {
        let key = (spec.n, spec.points, spec.half_width.to_bits());
        let mut cache = plan_cache().lock().expect("plan cache poisoned");
        cache
            .entry(key)
            .or_insert_with(|| Arc::new(SpectralPlan::new(spec)))
            .clone()
    }

    fn new(spec: &GridSpec) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let np = spec.points;
        let k0 = std::f64::consts::PI / spec.half_width;
        let xi = (0..np)
            .map(|k| {
                let m = if k < np / 2 { k as f64 } else { k as f64 - np as f64 };
                m * k0
            })
            .collect();
        SpectralPlan {
            n: spec.n,
            points: np,
            fwd: planner.plan_fft_forward(np),
            inv: planner.plan_fft_inverse(np),
            xi,
        }
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        self.xi[k]
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let np = self.points;
        fft.process(buf);
        if self.n == 2 {
            let mut col = vec![Complex64::new(0.0, 0.0); np];
            for c in 0..np {
                for r in 0..np {
                    col[r] = buf[r * np + c];
                }
                fft.process(&mut col);
                for r in 0..np {
                    buf[r * np + c] = col[r];
                }
            }
        }
    }

    /// `F⁻¹[symbol(ξ) · F[values]]`, real part. The closure receives the
    /// wavenumber vector and, per axis, whether the mode is the Nyquist mode.
    pub fn apply_symbol(
        &self,
        values: &[f64],
        symbol: impl Fn(&[f64], &[bool]) -> Complex64,
    ) -> Vec<f64> {
        let np = self.points;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        match self.n {
            1 => {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b *= symbol(&[self.xi[k]], &[k == np / 2]);
                }
            }
            _ => {
                for r in 0..np {
                    for c in 0..np {
                        buf[r * np + c] *= symbol(&[self.xi[r], self.xi[c]], &[r == np / 2, c == np / 2]);
                    }
                }
            }
        }
        self.transform(&mut buf, &self.inv);
        let norm = 1.0 / values.len() as f64;
        buf.iter().map(|b| b.re * norm).collect()
    }

    /// Symbol of `∂^α e^{tΔ}`: `(iξ)^α e^{−t|ξ|²}`, Nyquist zeroed for odd orders.
    pub fn heat_derivative_symbol(alpha: &[u32], t: f64, xi: &[f64], nyq: &[bool]) -> Complex64 {
        let mut s = Complex64::new((-t * xi.iter().map(|k| k * k).sum::<f64>()).exp(), 0.0);
        for (j, &a) in alpha.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if nyq[j] && a % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            s *= Complex64::new(0.0, xi[j]).powu(a);
        }
        s
    }
}
