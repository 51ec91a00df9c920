use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::{gauss_legendre, CompensatedSum, QuadratureSpec};
use crate::{Error, Result};

/// Scalar sample type on a θ′ grid.
pub trait Sample: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn norm_sqr(&self) -> f64;
}

impl Sample for f64 {
    fn norm_sqr(&self) -> f64 {
        self * self
    }
}

impl Sample for Complex64 {
    fn norm_sqr(&self) -> f64 {
        Complex64::norm_sqr(self)
    }
}

/// Uniform grid of `points` nodes on [min, max], endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ThetaGrid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) || points < 8 {
            return Err(Error::InvalidInput(format!("bad θ′ grid [{min}, {max}] with {points} points")));
        }
        Ok(Self { min, max, points })
    }

    /// The symmetric window [−Θ, Θ] of the spec.
    pub fn from_spec(spec: &QuadratureSpec) -> Self {
        Self { min: -spec.theta_cutoff, max: spec.theta_cutoff, points: spec.theta_points }
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.node(i))
    }

    /// Trapezoid rule with compensated summation.
    pub fn trapezoid(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        let mut acc = CompensatedSum::default();
        let last = self.points - 1;
        for (i, v) in values.into_iter().enumerate() {
            acc.add(if i == 0 || i == last { 0.5 * v } else { v });
        }
        self.spacing() * acc.value()
    }
}

/// Fourth-order finite-difference derivative with one-sided end stencils.
/// Requires at least 5 samples.
pub fn finite_difference<T: Sample>(v: &[T], h: f64) -> Vec<T> {
    let n = v.len();
    assert!(n >= 5, "finite_difference needs at least 5 samples");
    let s = 1.0 / (12.0 * h);
    let comb = |idx: [usize; 5], c: [f64; 5]| {
        idx.iter().zip(c).fold(T::default(), |acc, (&i, ci)| acc + v[i] * ci) * s
    };
    let mut d = vec![T::default(); n];
    d[0] = comb([0, 1, 2, 3, 4], [-25.0, 48.0, -36.0, 16.0, -3.0]);
    d[1] = comb([0, 1, 2, 3, 4], [-3.0, -10.0, 18.0, -6.0, 1.0]);
    for i in 2..n - 2 {
        d[i] = comb([i - 2, i - 1, i + 1, i + 2, i], [1.0, -8.0, 8.0, -1.0, 0.0]);
    }
    d[n - 2] = comb([n - 1, n - 2, n - 3, n - 4, n - 5], [3.0, 10.0, -18.0, 6.0, -1.0]);
    d[n - 1] = comb([n - 1, n - 2, n - 3, n - 4, n - 5], [25.0, -48.0, 36.0, -16.0, 3.0]);
    d
}

/// L² mass beyond the window estimated from the end samples, assuming decay
/// at least like e^{−|θ′|} past the ends.
pub fn tail_mass<T: Sample>(v: &[T]) -> f64 {
    match v {
        [] => 0.0,
        [a] => a.norm_sqr(),
        [a, .., b] => 0.5 * (a.norm_sqr() + b.norm_sqr()),
    }
}

fn leak_threshold(spec: &QuadratureSpec) -> f64 {
    1e3 * spec.abs_tol
}

/// Derivative of grid samples in θ′; rejects inputs that have not decayed at
/// the window ends.
pub fn spectral_diff<T: Sample>(values: &[T], grid: &ThetaGrid, spec: &QuadratureSpec) -> Result<Vec<T>> {
    if values.len() != grid.points {
        return Err(Error::InvalidInput(format!(
            "expected {} samples, got {}",
            grid.points,
            values.len()
        )));
    }
    let leaked = tail_mass(values);
    if leaked > leak_threshold(spec) {
        return Err(Error::BoundaryLeak { leaked });
    }
    Ok(finite_difference(values, grid.spacing()))
}

/// Result of shifting grid samples.
#[derive(Debug, Clone)]
pub struct Shifted<T> {
    pub values: Vec<T>,
    /// L² mass pushed out of the window plus the end-sample tail estimate.
    pub leaked: f64,
    /// L² distance between the degree-5 and degree-3 interpolants.
    pub interp_error: f64,
}

fn lagrange_eval<T: Sample>(v: &[T], r: f64, width: usize) -> T {
    let n = v.len();
    let half = width / 2;
    let j0 = (r.floor() as isize - (half as isize - 1)).clamp(0, (n - width) as isize) as usize;
    let mut acc = T::default();
    for k in 0..width {
        let mut w = 1.0;
        for j in 0..width {
            if j != k {
                w *= (r - (j0 + j) as f64) / (k as f64 - j as f64);
            }
        }
        acc = acc + v[j0 + k] * w;
    }
    acc
}

/// out(θ′) = v(θ′ − α) by six-point (fifth-order) Lagrange interpolation;
/// samples whose source lies outside the window are 0.
pub fn lagrange_shift<T: Sample>(v: &[T], grid: &ThetaGrid, alpha: f64) -> Shifted<T> {
    let n = v.len();
    assert_eq!(n, grid.points);
    let h = grid.spacing();
    let mut values = vec![T::default(); n];
    let mut err = CompensatedSum::default();
    for (i, out) in values.iter_mut().enumerate() {
        let r = (grid.node(i) - alpha - grid.min) / h;
        if r < -1e-12 || r > (n - 1) as f64 + 1e-12 {
            continue;
        }
        let r = r.clamp(0.0, (n - 1) as f64);
        let hi = lagrange_eval(v, r, 6);
        let lo = lagrange_eval(v, r, 4);
        err.add((hi - lo).norm_sqr());
        *out = hi;
    }
    let mut lost = CompensatedSum::default();
    for (j, x) in v.iter().enumerate() {
        let target = grid.node(j) + alpha;
        if target < grid.min - 1e-12 || target > grid.max + 1e-12 {
            lost.add(x.norm_sqr());
        }
    }
    Shifted {
        values,
        leaked: h * lost.value() + tail_mass(v),
        interp_error: (h * err.value()).sqrt(),
    }
}

/// As [`lagrange_shift`], failing with `BoundaryLeak` when the lost mass
/// exceeds 10³·abs_tol.
pub fn checked_shift<T: Sample>(v: &[T], grid: &ThetaGrid, alpha: f64, spec: &QuadratureSpec) -> Result<Shifted<T>> {
    let s = lagrange_shift(v, grid, alpha);
    if s.leaked > leak_threshold(spec) {
        return Err(Error::BoundaryLeak { leaked: s.leaked });
    }
    Ok(s)
}

/// Tensor-product quadrature on transverse coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseGrid {
    pub dim: usize,
    /// Flattened node coordinates, `dim` per node.
    pub coords: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TransverseGrid {
    /// Tensor product of one-dimensional rules.
    pub fn tensor(axes: &[(Vec<f64>, Vec<f64>)]) -> Self {
        let dim = axes.len();
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        let sizes: Vec<usize> = axes.iter().map(|a| a.0.len()).collect();
        let total: usize = sizes.iter().product();
        for mut flat in 0..total {
            let mut w = 1.0;
            let mut pt = vec![0.0; dim];
            for d in (0..dim).rev() {
                let k = flat % sizes[d];
                flat /= sizes[d];
                pt[d] = axes[d].0[k];
                w *= axes[d].1[k];
            }
            coords.extend(pt);
            weights.push(w);
        }
        Self { dim, coords, weights }
    }

    /// Tensor-product `points_per_dim`-point Gauss–Legendre rule on the box
    /// ∏[lo_d, hi_d]. A single high-order rule suits squares of bumps, which
    /// are flat enough at their support edges to converge geometrically.
    pub fn gauss_box(lo: &[f64], hi: &[f64], points_per_dim: usize) -> Self {
        let rule = gauss_legendre(points_per_dim);
        let axes: Vec<_> = lo.iter().zip(hi).map(|(&a, &b)| rule.composite_nodes(a, b, 1)).collect();
        Self::tensor(&axes)
    }

    /// Tensor product of composite rules: on each axis a `points_per_piece`
    /// Gauss–Legendre rule between consecutive breakpoints. Splitting at the
    /// support edges of bumps keeps every piece free of interior edges.
    pub fn gauss_pieces(breaks: &[Vec<f64>], points_per_piece: usize) -> Self {
        let rule = gauss_legendre(points_per_piece);
        let axes: Vec<_> = breaks
            .iter()
            .map(|b| {
                let (mut xs, mut ws) = (Vec::new(), Vec::new());
                for w in b.windows(2).filter(|w| w[1] > w[0]) {
                    let (x, wt) = rule.composite_nodes(w[0], w[1], 1);
                    xs.extend(x);
                    ws.extend(wt);
                }
                (xs, ws)
            })
            .collect();
        Self::tensor(&axes)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Compensated weighted sum in node order.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        let mut acc = CompensatedSum::default();
        for (w, v) in self.weights.iter().zip(values) {
            acc.add(w * v);
        }
        acc.value()
    }
}
