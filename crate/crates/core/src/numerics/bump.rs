use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::ThetaGrid;
use super::quadrature::{gl16, integrate_piecewise, CompensatedSum, QuadratureSpec};
use crate::{Error, Result};

/// Beyond this scaled frequency the profile transform is below its 1e-15
/// quadrature floor and is returned as 0.
pub const PROFILE_Q_MAX: f64 = 1000.0;
const Q_MAX: f64 = PROFILE_Q_MAX;

fn profile(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn profile_derivative(u: f64) -> f64 {
    let s = 1.0 - u * u;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp() * (-2.0 * u / (s * s))
    }
}

/// Φ̂(q) = ∫ e^{iqu} φ(u) du for the unit profile φ(u) = exp(−1/(1−u²)).
///
/// Real and even. Evaluated from degree-16 Chebyshev interpolants on unit
/// panels in |q|, each built on first use from [`bump_profile_transform_direct`].
pub fn bump_profile_transform(q: f64) -> f64 {
    const PANELS: usize = Q_MAX as usize;
    static TABLE: [OnceLock<[f64; CHEB_NODES]>; PANELS] = [const { OnceLock::new() }; PANELS];
    let q = q.abs();
    if q >= Q_MAX {
        return 0.0;
    }
    let k = q as usize;
    let c = TABLE[k].get_or_init(|| chebyshev_panel(k as f64));
    let x = 2.0 * (q - k as f64) - 1.0;
    // Clenshaw
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c[1..].iter().rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

const CHEB_NODES: usize = 17;

fn chebyshev_panel(lo: f64) -> [f64; CHEB_NODES] {
    let n = CHEB_NODES as f64;
    let angle = |j: usize| std::f64::consts::PI * (j as f64 + 0.5) / n;
    let values: Vec<f64> = (0..CHEB_NODES).map(|j| bump_profile_transform_direct(lo + 0.5 * (angle(j).cos() + 1.0))).collect();
    let mut c = [0.0; CHEB_NODES];
    for (m, cm) in c.iter_mut().enumerate() {
        let s: f64 = values.iter().enumerate().map(|(j, v)| v * (m as f64 * angle(j)).cos()).sum();
        *cm = 2.0 * s / n;
    }
    c[0] *= 0.5;
    c
}

/// Φ̂(q) by composite Gauss–Legendre on [0,1] with at most 4 rad of phase
/// per panel, so the cost grows linearly in |q|.
pub fn bump_profile_transform_direct(q: f64) -> f64 {
    let q = q.abs();
    if q > Q_MAX {
        return 0.0;
    }
    let panels = 8 + (q / 4.0).ceil() as usize;
    let h = 1.0 / panels as f64;
    let rule = gl16();
    let mut acc = CompensatedSum::default();
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        let mut s = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = mid + 0.5 * h * x;
            s += w * (q * u).cos() * profile(u);
        }
        acc.add(s * h);
    }
    acc.value()
}

type TableKey = [u64; 4];

const TABLE_CACHE_LIMIT: usize = 512;

/// Φ̂(w·e^{−θ′}) at the nodes of `grid`.
///
/// Tables are memoized per (w, grid), since a fibre map evaluates the same
/// few bump widths at every transverse node.
pub fn profile_transform_table(w: f64, grid: &ThetaGrid) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<Vec<f64>>>>> = OnceLock::new();
    let key = [w.to_bits(), grid.min.to_bits(), grid.max.to_bits(), grid.points as u64];
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("table cache poisoned").get(&key) {
        return t.clone();
    }
    let table: Arc<Vec<f64>> = Arc::new(grid.nodes().map(|th| bump_profile_transform(w * (-th).exp())).collect());
    let mut guard = cache.lock().expect("table cache poisoned");
    if guard.len() >= TABLE_CACHE_LIMIT {
        guard.clear();
    }
    guard.insert(key, table.clone());
    table
}

/// A scaled, translated copy of exp(−1/(1−u²)), or its first derivative.
///
/// Order 0: `amplitude · φ((x−center)/half_width)`.
/// Order 1: `amplitude · d/dx φ((x−center)/half_width)`, which has zero mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothBump {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
    pub derivative_order: u8,
}

impl SmoothBump {
    pub fn new(center: f64, half_width: f64, amplitude: f64, derivative_order: u8) -> Result<Self> {
        let b = Self { center, half_width, amplitude, derivative_order };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center.is_finite() && self.amplitude.is_finite()) {
            return Err(Error::InvalidInput("bump center and amplitude must be finite".into()));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bump half_width must be positive, got {}",
                self.half_width
            )));
        }
        if self.derivative_order > 1 {
            return Err(Error::InvalidInput(format!(
                "bump derivative_order must be 0 or 1, got {}",
                self.derivative_order
            )));
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        match self.derivative_order {
            0 => self.amplitude * profile(u),
            _ => self.amplitude * profile_derivative(u) / self.half_width,
        }
    }

    pub fn is_zero_mean(&self) -> bool {
        self.derivative_order >= 1 || self.amplitude == 0.0
    }

    /// ∫ e^{ixp} b(x) dx.
    pub fn fourier(&self, p: f64) -> Complex64 {
        let base = self.amplitude
            * self.half_width
            * bump_profile_transform(p * self.half_width)
            * Complex64::from_polar(1.0, p * self.center);
        match self.derivative_order {
            0 => base,
            _ => Complex64::new(0.0, -p) * base,
        }
    }

    /// x ↦ e^{−α} b(e^{−α}(x − t)).
    pub fn dilate_translate(&self, alpha: f64, t: f64) -> Self {
        let s = alpha.exp();
        let amplitude = match self.derivative_order {
            0 => self.amplitude / s,
            _ => self.amplitude,
        };
        Self { center: s * self.center + t, half_width: s * self.half_width, amplitude, derivative_order: self.derivative_order }
    }
}

/// Finite linear combination of bumps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothFn1D {
    pub terms: Vec<(f64, SmoothBump)>,
}

impl SmoothFn1D {
    pub fn new(terms: Vec<(f64, SmoothBump)>) -> Result<Self> {
        let f = Self { terms };
        f.validate()?;
        Ok(f)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Order-1 bumps centred at e^y for y on a `step`-spaced lattice inside
    /// (mid − half, mid + half), each of half-width 0.8e^y and amplitude
    /// e^{y/2}·φ((y − mid)/half)·step. The θ′ transform of such a packet varies
    /// slowly, which keeps stencil derivatives accurate.
    pub fn log_packet(mid: f64, half: f64, step: f64) -> Result<Self> {
        if !(mid.is_finite() && half.is_finite() && half > 0.0 && step.is_finite() && step > 0.0 && step < half) {
            return Err(Error::InvalidInput(format!(
                "log packet needs finite mid and 0 < step < half, got mid={mid}, half={half}, step={step}"
            )));
        }
        let n = (2.0 * half / step).round() as i64;
        let terms = (1..n)
            .map(|j| {
                let y = mid - half + j as f64 * step;
                let c = y.exp();
                let a = (y / 2.0).exp() * profile((y - mid) / half) * step;
                (1.0, SmoothBump { center: c, half_width: 0.8 * c, amplitude: a, derivative_order: 1 })
            })
            .collect();
        Self::new(terms)
    }

    pub fn single(b: SmoothBump) -> Self {
        Self { terms: vec![(1.0, b)] }
    }

    pub fn validate(&self) -> Result<()> {
        for (c, b) in &self.terms {
            if !c.is_finite() {
                return Err(Error::InvalidInput("term coefficient must be finite".into()));
            }
            b.validate()?;
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|(c, b)| c * b.eval(x)).sum()
    }

    fn active(&self) -> impl Iterator<Item = &(f64, SmoothBump)> {
        self.terms.iter().filter(|(c, b)| *c != 0.0 && b.amplitude != 0.0)
    }

    /// Convex hull of the term supports, `None` for the zero function.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.active().map(|(_, b)| b.support()).reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    pub fn is_zero(&self) -> bool {
        self.active().next().is_none()
    }

    /// Sorted, deduplicated support edges of all terms.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.active().flat_map(|(_, b)| [b.support().0, b.support().1]).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Indices of terms that carry a nonzero mean.
    pub fn zero_mode_terms(&self) -> Vec<usize> {
        self.terms
            .iter()
            .enumerate()
            .filter(|(_, (c, b))| *c != 0.0 && !b.is_zero_mean())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_zero_mean(&self) -> bool {
        self.zero_mode_terms().is_empty()
    }

    pub fn fourier(&self, p: f64) -> Complex64 {
        self.terms.iter().map(|(c, b)| *c * b.fourier(p)).sum()
    }

    /// x ↦ e^{−α} f(e^{−α}(x − t)), term by term.
    pub fn dilate_translate(&self, alpha: f64, t: f64) -> Self {
        Self { terms: self.terms.iter().map(|(c, b)| (*c, b.dilate_translate(alpha, t))).collect() }
    }

    pub fn translate(&self, t: f64) -> Self {
        self.dilate_translate(0.0, t)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { terms: self.terms.iter().map(|(c, b)| (c * k, *b)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { terms: self.terms.iter().chain(&other.terms).copied().collect() }
    }

    /// ∫_ℝ f. Order-1 terms contribute exactly 0.
    pub fn integral(&self, spec: &QuadratureSpec) -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for (c, b) in self.active() {
            if b.derivative_order == 0 {
                let (lo, hi) = b.support();
                acc.add(c * integrate_piecewise(|x| b.eval(x), &[lo, hi], spec)?);
            }
        }
        Ok(acc.value())
    }

    /// ∫_{−∞}^x f(s) ds. Order-1 terms integrate in closed form to the order-0 bump.
    pub fn primitive(&self, x: f64, spec: &QuadratureSpec) -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for (c, b) in self.active() {
            let (lo, hi) = b.support();
            if x <= lo {
                continue;
            }
            if b.derivative_order >= 1 {
                acc.add(c * b.amplitude * profile((x - b.center) / b.half_width));
            } else {
                acc.add(c * integrate_piecewise(|s| b.eval(s), &[lo, x.min(hi)], spec)?);
            }
        }
        Ok(acc.value())
    }

    /// ∫ w(x) f(x)² dx over `[lo, hi]` (either bound may be infinite), split at
    /// all support edges so that each panel sees a smooth integrand.
    pub fn weighted_square_integral(
        &self,
        lo: f64,
        hi: f64,
        weight: impl Fn(f64) -> f64 + Sync,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        let Some((s0, s1)) = self.support() else { return Ok(0.0) };
        let (a, b) = (lo.max(s0), hi.min(s1));
        if a >= b {
            return Ok(0.0);
        }
        let mut pts: Vec<f64> = self.breakpoints().into_iter().filter(|p| *p > a && *p < b).collect();
        pts.insert(0, a);
        pts.push(b);
        integrate_piecewise(
            |x| {
                let v = self.eval(x);
                weight(x) * v * v
            },
            &pts,
            spec,
        )
    }
}
