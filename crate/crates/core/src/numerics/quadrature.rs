use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum in iteration order.
pub fn compensated_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// n-point rule; nodes by Newton iteration on P_n from Chebyshev-like guesses.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[m - 1] = 0.0;
    }
    GaussLegendre { nodes, weights }
}

/// The 16-point panel rule used throughout.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

impl GaussLegendre {
    /// Composite rule with `panels` equal panels on [a, b].
    pub fn composite(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / panels as f64;
        let mut acc = CompensatedSum::default();
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            acc.add(0.5 * h * s);
        }
        acc.value()
    }

    /// Nodes and weights of the composite rule on [a, b].
    pub fn composite_nodes(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.nodes.len());
        let mut ws = Vec::with_capacity(panels * self.nodes.len());
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }
}

fn default_compact_rule() -> usize {
    16
}
fn default_theta_cutoff() -> f64 {
    12.0
}
fn default_theta_points() -> usize {
    2048
}
fn default_transverse_points() -> usize {
    64
}
fn default_abs_tol() -> f64 {
    1e-10
}
fn default_rel_tol() -> f64 {
    1e-8
}

/// Discretization and tolerance settings shared by all quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss–Legendre panels per unit length on compact supports.
    #[serde(default = "default_compact_rule")]
    pub compact_rule: usize,
    /// θ′ window is [−theta_cutoff, theta_cutoff].
    #[serde(default = "default_theta_cutoff")]
    pub theta_cutoff: f64,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    #[serde(default = "default_transverse_points")]
    pub transverse_points_per_dim: usize,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            compact_rule: default_compact_rule(),
            theta_cutoff: default_theta_cutoff(),
            theta_points: default_theta_points(),
            transverse_points_per_dim: default_transverse_points(),
            abs_tol: default_abs_tol(),
            rel_tol: default_rel_tol(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("compact_rule", self.compact_rule),
            ("theta_points", self.theta_points),
            ("transverse_points_per_dim", self.transverse_points_per_dim),
        ] {
            if n < 8 {
                return Err(Error::InvalidInput(format!("{name} must be at least 8, got {n}")));
            }
        }
        if !(self.theta_cutoff.is_finite() && self.theta_cutoff > 0.0) {
            return Err(Error::InvalidInput(format!(
                "theta_cutoff must be positive, got {}",
                self.theta_cutoff
            )));
        }
        for (name, t) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Both tolerances multiplied by `x`.
    pub fn with_tol_scale(mut self, x: f64) -> Self {
        self.abs_tol *= x;
        self.rel_tol *= x;
        self
    }

    pub fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Quadrature value with its doubling error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

const MIN_PANELS: usize = 16;

/// Composite 16-point Gauss–Legendre on the finite interval [a, b] (at least
/// 16 panels, so that a single bump is resolved to ~1e−14) with one
/// doubling check: I(n) vs I(2n), then I(2n) vs I(4n). Two failures in a row
/// give `NonConvergent`.
pub fn integrate_1d_est(f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("integration bounds must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let rule = gl16();
    let n = MIN_PANELS.max(((b - a).abs() * spec.compact_rule as f64).ceil() as usize);
    let i1 = rule.composite(a, b, n, &f);
    let i2 = rule.composite(a, b, 2 * n, &f);
    if (i2 - i1).abs() <= spec.tolerance(i2) {
        return Ok(Integral { value: i2, error: (i2 - i1).abs() });
    }
    let i4 = rule.composite(a, b, 4 * n, &f);
    if (i4 - i2).abs() <= spec.tolerance(i4) {
        return Ok(Integral { value: i4, error: (i4 - i2).abs() });
    }
    Err(Error::NonConvergent { prev: i2, last: i4 })
}

pub fn integrate_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_1d_est(f, a, b, spec).map(|i| i.value)
}

/// Sum of `integrate_1d` over consecutive breakpoints.
pub fn integrate_piecewise(f: impl Fn(f64) -> f64, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let mut acc = CompensatedSum::default();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            acc.add(integrate_1d(&f, w[0], w[1], spec)?);
        }
    }
    Ok(acc.value())
}
