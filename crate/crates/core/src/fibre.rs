//! The chiral U(1)-current fibre L²(ℝ, dθ′).
//!
//! A zero-mean g ∈ C₀^∞(ℝ) is represented by ξ_g(θ′) = ĝ(e^{−θ′}) with
//! ĝ(p) = ∫e^{ixp}g(x)dx. The inner product is (2π)⁻¹∫ ξ̄ η dθ′, which makes
//! Im⟨ξ_g, ξ_f⟩ = ½∫G f with G′ = g.
//!
//! Translations and dilations act by
//! (U(α, t)ξ)(θ′) = e^{ite^{−θ′}} ξ(θ′ − α), i.e. g ↦ e^{−α}g(e^{−α}(· − t)),
//! and the modular group of the half-line (a, ∞) is Δ^{is} = Ad T(a) U(−2πs, 0).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{checked_shift, profile_transform_table, tail_mass, CompensatedSum, QuadratureSpec, SmoothFn1D, ThetaGrid};
use crate::stdsubspace::{entropy_cutting, make_subspace};
use crate::{Error, Result};

/// Normalization of the fibre inner product.
pub const FIBRE_MEASURE: f64 = 1.0 / (2.0 * PI);

/// Sampled θ′-representation of one fibre vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FibreVector {
    pub grid: ThetaGrid,
    pub values: Vec<Complex64>,
    /// Position-space witness, present when the vector is ξ_g of a known g.
    pub source: Option<SmoothFn1D>,
    /// Accumulated L² interpolation-error estimate from grid shifts.
    pub interp_error: f64,
}

/// Half-open interval (a, b) with optional infinite ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSubspaceTag {
    pub a: f64,
    pub b: f64,
}

impl IntervalSubspaceTag {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(Error::InvalidInput(format!("interval ({a}, {b}) is empty")));
        }
        Ok(Self { a, b })
    }

    /// Whether a witness is supported in the interval.
    pub fn contains(&self, g: &SmoothFn1D) -> bool {
        match g.support() {
            None => true,
            Some((lo, hi)) => lo >= self.a && hi <= self.b,
        }
    }

    /// Image under x ↦ e^α x + t.
    pub fn transform(&self, alpha: f64, t: f64) -> Self {
        let s = alpha.exp();
        Self { a: s * self.a + t, b: s * self.b + t }
    }
}

/// ĝ(e^{−θ′}) at every grid node.
pub fn sample_transform(g: &SmoothFn1D, grid: &ThetaGrid) -> Vec<Complex64> {
    let tables: Vec<_> = g
        .terms
        .iter()
        .map(|(_, b)| profile_transform_table(b.half_width, grid))
        .collect();
    (0..grid.points)
        .into_par_iter()
        .map(|i| {
            let p = (-grid.node(i)).exp();
            g.terms
                .iter()
                .zip(&tables)
                .map(|((c, b), t)| {
                    let base = c * b.amplitude * b.half_width * t[i] * Complex64::from_polar(1.0, p * b.center);
                    match b.derivative_order {
                        0 => base,
                        _ => Complex64::new(0.0, -p) * base,
                    }
                })
                .sum()
        })
        .collect()
}

impl FibreVector {
    pub fn zeros(grid: ThetaGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.points], source: None, interp_error: 0.0 }
    }

    /// ξ_g on `grid` without the zero-mode check.
    pub fn from_source(g: &SmoothFn1D, grid: ThetaGrid) -> Self {
        Self { grid, values: sample_transform(g, &grid), source: Some(g.clone()), interp_error: 0.0 }
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("fibre vectors live on different θ′ grids".into()));
        }
        Ok(())
    }

    /// (2π)⁻¹∫ conj(ξ) η dθ′, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_grid(other)?;
        let re = self.grid.trapezoid(self.values.iter().zip(&other.values).map(|(a, b)| (a.conj() * b).re));
        let im = self.grid.trapezoid(self.values.iter().zip(&other.values).map(|(a, b)| (a.conj() * b).im));
        Ok(Complex64::new(re, im) * FIBRE_MEASURE)
    }

    pub fn norm_sqr(&self) -> f64 {
        FIBRE_MEASURE * self.plain_norm_sqr()
    }

    /// ∫|ξ|² dθ′ without the (2π)⁻¹.
    pub fn plain_norm_sqr(&self) -> f64 {
        self.grid.trapezoid(self.values.iter().map(|v| v.norm_sqr()))
    }

    /// Estimated L² mass outside the window.
    pub fn tail_mass(&self) -> f64 {
        tail_mass(&self.values)
    }

    /// Largest pointwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Physical norm of the difference.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        let d = self.grid.trapezoid(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()));
        Ok((FIBRE_MEASURE * d).sqrt())
    }

    /// Multiplication by e^{iτe^{−θ′}}, the translation by τ.
    pub fn translate(&self, tau: f64) -> Self {
        let values = self
            .grid
            .nodes()
            .zip(&self.values)
            .map(|(th, v)| v * Complex64::from_polar(1.0, tau * (-th).exp()))
            .collect();
        Self { grid: self.grid, values, source: self.source.as_ref().map(|g| g.translate(tau)), interp_error: self.interp_error }
    }

    /// Pure θ′-shift ξ(θ′) ↦ ξ(θ′ − α), the dilation by e^α about 0.
    /// With a witness the result is resampled exactly; otherwise it is
    /// interpolated and the interpolation error is accumulated.
    pub fn dilate(&self, alpha: f64, spec: &QuadratureSpec) -> Result<Self> {
        if alpha == 0.0 {
            return Ok(self.clone());
        }
        let s = checked_shift(&self.values, &self.grid, alpha, spec)?;
        match &self.source {
            Some(g) => Ok(Self::from_source(&g.dilate_translate(alpha, 0.0), self.grid)),
            None => Ok(Self { grid: self.grid, values: s.values, source: None, interp_error: self.interp_error + s.interp_error }),
        }
    }

    /// Conventional current picture: Ĝ(e^{−θ′}) = i e^{θ′} ξ_g(θ′) with G′ = g.
    pub fn current_picture(&self) -> Vec<Complex64> {
        self.grid.nodes().zip(&self.values).map(|(th, v)| Complex64::new(0.0, th.exp()) * v).collect()
    }
}

/// ξ_g on the default window of `spec`; g must have zero mean.
pub fn make_fibre(g: &SmoothFn1D, spec: &QuadratureSpec) -> Result<FibreVector> {
    let terms = g.zero_mode_terms();
    if !terms.is_empty() {
        return Err(Error::ZeroModePresent { terms });
    }
    Ok(FibreVector::from_source(g, ThetaGrid::from_spec(spec)))
}

/// ½∫G(x) f(x) dx with G the primitive of g.
pub fn symplectic_form(g: &SmoothFn1D, f: &SmoothFn1D, spec: &QuadratureSpec) -> Result<f64> {
    for h in [g, f] {
        let terms = h.zero_mode_terms();
        if !terms.is_empty() {
            return Err(Error::ZeroModePresent { terms });
        }
    }
    let (Some((g0, _)), Some((f0, f1))) = (g.support(), f.support()) else {
        return Ok(0.0);
    };
    let lo = f0.max(g0);
    if lo >= f1 {
        return Ok(0.0);
    }
    let mut pts: Vec<f64> = g.breakpoints().into_iter().chain(f.breakpoints()).filter(|p| *p > lo && *p < f1).collect();
    pts.push(lo);
    pts.push(f1);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    // G is closed-form for zero-mean g.
    let v = crate::numerics::integrate_piecewise(
        |x| g.primitive(x, spec).expect("closed-form primitive") * f.eval(x),
        &pts,
        spec,
    )?;
    Ok(0.5 * v)
}

/// U(α, t)ξ(θ′) = e^{ite^{−θ′}} ξ(θ′ − α).
pub fn u1_act(xi: &FibreVector, alpha: f64, t: f64, spec: &QuadratureSpec) -> Result<FibreVector> {
    Ok(xi.dilate(alpha, spec)?.translate(t))
}

/// Δ^{is} of the half-line (a, ∞): geometrically x ↦ a + e^{−2πs}(x − a).
pub fn modular_flow_halfline(xi: &FibreVector, s: f64, a: f64, spec: &QuadratureSpec) -> Result<FibreVector> {
    Ok(xi.translate(-a).dilate(-2.0 * PI * s, spec)?.translate(a))
}

/// π∫_t^∞ (x − t) k(x)² dx.
pub fn halfline_entropy(k: &SmoothFn1D, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(PI * k.weighted_square_integral(t, f64::INFINITY, |x| x - t, spec)?)
}

/// Entropy of ξ_k for the real span of N dilates of ξ_k about the cut t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedEntropy {
    pub dimension: usize,
    pub step: f64,
    pub entropy: f64,
    pub closed_form: f64,
    /// Condition number of the Gram matrix of the dilates.
    pub gram_condition: f64,
}

impl TruncatedEntropy {
    pub fn deviation(&self) -> f64 {
        (self.entropy - self.closed_form).abs()
    }
}

/// Finite-dimensional oracle for the half-line entropy.
///
/// H_N is the real span of {U_t(js)ξ_k : j ∈ [−N/2, N/2)}, U_t the dilation
/// group about t; it is contained in the half-line subspace of (t, ∞) whenever
/// k is supported there. Its Gram matrix is Toeplitz, r(δ) = ⟨ξ, ξ(· − δ)⟩,
/// evaluated with exact grid shifts. Coordinates come from a Cholesky factor
/// and the entropy from [`entropy_cutting`].
pub fn truncated_fibre_entropy(k: &SmoothFn1D, t: f64, n: usize, step: f64, spec: &QuadratureSpec) -> Result<TruncatedEntropy> {
    if n < 2 || !n.is_multiple_of(2) || !(step > 0.0) {
        return Err(Error::InvalidInput(format!("need even N ≥ 2 and positive step, got N={n}, step={step}")));
    }
    let terms = k.zero_mode_terms();
    if !terms.is_empty() {
        return Err(Error::ZeroModePresent { terms });
    }
    const TARGET_SPACING: f64 = 0.025;
    let sub = (step / TARGET_SPACING).round().max(1.0) as usize;
    let h = step / sub as f64;
    let lo = -10.0;
    let hi = 15.0 + n as f64 * step;
    let points = ((hi - lo) / h).round() as usize + 1;
    let grid = ThetaGrid::new(lo, lo + (points - 1) as f64 * h, points)?;
    let xi = FibreVector::from_source(&k.translate(-t), grid);
    let r: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|d| {
            let m = d * sub;
            let mut re = CompensatedSum::default();
            let mut im = CompensatedSum::default();
            for i in m..points {
                let z = xi.values[i].conj() * xi.values[i - m];
                let w = if i == m || i == points - 1 { 0.5 } else { 1.0 };
                re.add(w * z.re);
                im.add(w * z.im);
            }
            Complex64::new(re.value(), im.value()) * (h * FIBRE_MEASURE)
        })
        .collect();
    // G_ij = ⟨ξ_i, ξ_j⟩ = r(j − i) for j ≥ i, with ξ_j = ξ(· − js).
    let gram = DMatrix::from_fn(n, n, |i, j| if j >= i { r[j - i] } else { r[i - j].conj() });
    let eig = gram.clone().symmetric_eigen();
    let (emin, emax) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &l| (a.min(l), b.max(l)));
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("Gram matrix of the dilates is not positive definite".into()))?;
    let coords = chol.l().adjoint();
    let spanning: Vec<DVector<Complex64>> = (0..n).map(|j| coords.column(j).into_owned()).collect();
    let sub_h = make_subspace(&spanning)?;
    let entropy = entropy_cutting(&sub_h, &spanning[n / 2])?;
    Ok(TruncatedEntropy {
        dimension: n,
        step,
        entropy,
        closed_form: halfline_entropy(k, t, spec)?,
        gram_condition: emax / emin,
    })
}
