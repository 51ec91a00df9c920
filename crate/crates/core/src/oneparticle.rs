//! Mass shell, thin test functions and their direct-integral decomposition.
//!
//! Null coordinates are x± = (x₀ ± x₁)/√2 and p₋ = e^{−θ′}. A thin test function
//! δ(x₋)g(x₊, 𝐱⊥) restricts to ĝ(p₋, 𝐩⊥) = ∫e^{i(x₊p₋ − 𝐱⊥·𝐩⊥)}g on the mass
//! shell. Two transverse pictures are kept:
//!
//! - momentum: fibre at 𝐩⊥ holds ĝ(e^{−θ′}, 𝐩⊥);
//! - spatial: fibre at 𝐱⊥ holds g̃(e^{−θ′}, 𝐱⊥), the transform in x₊ alone.
//!
//! Both carry the plain metric ∫|ĝ|²dθ′d𝐩⊥ = (2π)^{D−1}∫|g̃|²dθ′d𝐱⊥; the
//! one-particle inner product is (2π)^{−D} times it, which in the spatial
//! picture is the transverse integral of fibre inner products.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fibre::{sample_transform, FibreVector, FIBRE_MEASURE};
use crate::numerics::{
    gl16, CompensatedSum, PROFILE_Q_MAX, QuadratureSpec, SmoothFn1D, ThetaGrid, TransverseGrid,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassShellParams {
    #[serde(default = "default_mass")]
    pub mass: f64,
    /// Spacetime dimension D + 1 has D space dimensions; D − 1 are transverse.
    #[serde(default = "default_dim")]
    pub spacetime_dim: usize,
}

fn default_mass() -> f64 {
    1.0
}
fn default_dim() -> usize {
    2
}

impl Default for MassShellParams {
    fn default() -> Self {
        Self { mass: default_mass(), spacetime_dim: default_dim() }
    }
}

impl MassShellParams {
    pub fn new(mass: f64, spacetime_dim: usize) -> Result<Self> {
        let p = Self { mass, spacetime_dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::InvalidInput(format!("mass must be ≥ 0, got {}", self.mass)));
        }
        if self.spacetime_dim < 2 {
            return Err(Error::InvalidInput(format!("dimension D must be ≥ 2, got {}", self.spacetime_dim)));
        }
        Ok(())
    }

    pub fn transverse_dim(&self) -> usize {
        self.spacetime_dim - 1
    }
}

/// ω_m(𝐩⊥) = √(m² + |𝐩⊥|²).
pub fn omega(p_perp: &[f64], params: &MassShellParams) -> Result<f64> {
    let p2: f64 = p_perp.iter().map(|p| p * p).sum();
    if params.mass == 0.0 && p2 == 0.0 {
        return Err(Error::ZeroMassZeroMomentum);
    }
    Ok((params.mass * params.mass + p2).sqrt())
}

/// g(x₊, 𝐱⊥) = Σᵢ uᵢ(x₊) ∏_d vᵢ_d(x⊥_d).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThinTestFunction {
    pub terms: Vec<(SmoothFn1D, Vec<SmoothFn1D>)>,
}

impl ThinTestFunction {
    pub fn new(terms: Vec<(SmoothFn1D, Vec<SmoothFn1D>)>) -> Result<Self> {
        let g = Self { terms };
        g.validate()?;
        Ok(g)
    }

    pub fn separable(u: SmoothFn1D, v: Vec<SmoothFn1D>) -> Self {
        Self { terms: vec![(u, v)] }
    }

    pub fn validate(&self) -> Result<()> {
        let Some(dim) = self.terms.first().map(|t| t.1.len()) else { return Ok(()) };
        if dim == 0 || self.terms.iter().any(|t| t.1.len() != dim) {
            return Err(Error::InvalidInput("all terms need the same nonzero number of transverse factors".into()));
        }
        for (u, vs) in &self.terms {
            u.validate()?;
            for v in vs {
                v.validate()?;
            }
        }
        Ok(())
    }

    /// Number of transverse coordinates, `None` for the empty function.
    pub fn transverse_dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.1.len())
    }

    /// True iff every longitudinal factor has ∫u dx₊ = 0 by construction.
    pub fn zero_mode_flag(&self) -> bool {
        self.zero_mode_terms().is_empty()
    }

    pub fn zero_mode_terms(&self) -> Vec<usize> {
        self.terms.iter().enumerate().filter(|(_, (u, vs))| !u.is_zero_mean() && !vs.iter().any(|v| v.is_zero())).map(|(i, _)| i).collect()
    }

    pub fn eval(&self, x_plus: f64, x_perp: &[f64]) -> f64 {
        self.terms.iter().map(|(u, vs)| u.eval(x_plus) * vs.iter().zip(x_perp).map(|(v, x)| v.eval(*x)).product::<f64>()).sum()
    }

    fn transverse_weight(vs: &[SmoothFn1D], x_perp: &[f64]) -> f64 {
        vs.iter().zip(x_perp).map(|(v, x)| v.eval(*x)).product()
    }

    /// The fibre function x₊ ↦ g(x₊, 𝐱⊥).
    pub fn fibre_function(&self, x_perp: &[f64]) -> SmoothFn1D {
        let mut terms = Vec::new();
        for (u, vs) in &self.terms {
            let w = Self::transverse_weight(vs, x_perp);
            if w != 0.0 {
                terms.extend(u.terms.iter().map(|(c, b)| (c * w, *b)));
            }
        }
        SmoothFn1D { terms }
    }

    /// Bounding box of the transverse supports.
    pub fn transverse_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let dim = self.transverse_dim()?;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for (u, vs) in &self.terms {
            if u.is_zero() {
                continue;
            }
            for (d, v) in vs.iter().enumerate() {
                if let Some((a, b)) = v.support() {
                    lo[d] = lo[d].min(a);
                    hi[d] = hi[d].max(b);
                }
            }
        }
        lo.iter().zip(&hi).all(|(a, b)| a < b).then_some((lo, hi))
    }

    /// Hull of the longitudinal supports.
    pub fn longitudinal_support(&self) -> Option<(f64, f64)> {
        self.terms.iter().filter_map(|(u, _)| u.support()).reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    /// Smallest bump half-width among the transverse factors.
    fn min_transverse_width(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|(_, vs)| vs.iter().flat_map(|v| v.terms.iter().map(|(_, b)| b.half_width)))
            .fold(f64::INFINITY, f64::min)
    }

    /// ĝ(p₋, 𝐩⊥).
    pub fn fourier(&self, p_minus: f64, p_perp: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(u, vs)| u.fourier(p_minus) * vs.iter().zip(p_perp).map(|(v, p)| v.fourier(-p)).product::<Complex64>())
            .sum()
    }

    /// Per axis: the transverse box ends and every support edge of a
    /// transverse factor inside it, sorted.
    pub fn transverse_breakpoints(&self) -> Option<Vec<Vec<f64>>> {
        let (lo, hi) = self.transverse_box()?;
        let mut axes: Vec<Vec<f64>> = lo.iter().zip(&hi).map(|(a, b)| vec![*a, *b]).collect();
        for (u, vs) in &self.terms {
            if u.is_zero() {
                continue;
            }
            for (d, v) in vs.iter().enumerate() {
                axes[d].extend(v.breakpoints().into_iter().filter(|x| *x > lo[d] && *x < hi[d]));
            }
        }
        for a in &mut axes {
            a.sort_by(f64::total_cmp);
            a.dedup();
        }
        Some(axes)
    }

    /// Spatial-picture grid: composite Gauss–Legendre on the transverse box,
    /// split at the support edges of the transverse factors.
    pub fn spatial_grid(&self, spec: &QuadratureSpec) -> Result<TransverseGrid> {
        let breaks = self.transverse_breakpoints().ok_or_else(|| Error::InvalidInput("test function is zero".into()))?;
        Ok(TransverseGrid::gauss_pieces(&breaks, spec.transverse_points_per_dim))
    }

    /// Momentum grid on [−P, P]^{D−1}; P is set so that every transverse
    /// factor has decayed below ~e^{−24}, and each panel spans at most 6 rad of
    /// e^{i𝐱⊥·𝐩⊥} across the support box. Panel edges are symmetric about 0,
    /// so 𝐩⊥ = 0 is never a node.
    pub fn momentum_grid(&self) -> Result<TransverseGrid> {
        const SCALED_EXTENT: f64 = 300.0;
        let (lo, hi) = self.transverse_box().ok_or_else(|| Error::InvalidInput("test function is zero".into()))?;
        let p_max = SCALED_EXTENT / self.min_transverse_width();
        let reach = lo.iter().chain(&hi).map(|x| x.abs()).fold(0.5, f64::max);
        let panel = 6.0 / reach;
        let half_panels = (p_max / panel).ceil() as usize;
        let axis = gl16().composite_nodes(-(half_panels as f64) * panel, half_panels as f64 * panel, 2 * half_panels);
        Ok(TransverseGrid::tensor(&vec![axis; lo.len()]))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(u, vs)| u.is_zero() || vs.iter().any(|v| v.is_zero()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Momentum,
    Spatial,
}

/// Discretized ∫⊕ L²(ℝ, dθ′) over a transverse quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectIntegralVector {
    pub representation: Representation,
    pub params: MassShellParams,
    pub transverse: TransverseGrid,
    pub fibres: Vec<FibreVector>,
}

impl DirectIntegralVector {
    pub fn grid(&self) -> ThetaGrid {
        self.fibres.first().map(|f| f.grid).unwrap_or(ThetaGrid { min: -1.0, max: 1.0, points: 8 })
    }

    fn plain_factor(&self) -> f64 {
        match self.representation {
            Representation::Momentum => 1.0,
            Representation::Spatial => (2.0 * PI).powi(self.params.transverse_dim() as i32),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.representation != other.representation
            || self.transverse != other.transverse
            || self.fibres.len() != other.fibres.len()
        {
            return Err(Error::InvalidInput("direct-integral vectors are not on the same grids".into()));
        }
        Ok(())
    }

    /// Σ_nodes w ∫ conj(ξ) η dθ′ in node order.
    fn raw_pairing(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        let per: Vec<Complex64> = self
            .fibres
            .par_iter()
            .zip(&other.fibres)
            .map(|(a, b)| a.inner(b).map(|z| z / FIBRE_MEASURE))
            .collect::<Result<_>>()?;
        let re = self.transverse.integrate(per.iter().map(|z| z.re));
        let im = self.transverse.integrate(per.iter().map(|z| z.im));
        Ok(Complex64::new(re, im))
    }

    /// One-particle inner product, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        let d = self.params.spacetime_dim as i32;
        Ok(self.raw_pairing(other)? * self.plain_factor() / (2.0 * PI).powi(d))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).map(|z| z.re).unwrap_or(f64::NAN)
    }

    /// ∫|ĝ(e^{−θ′}, 𝐩⊥)|² dθ′ d𝐩⊥ in either picture.
    pub fn plain_norm_sqr(&self) -> f64 {
        self.raw_pairing(self).map(|z| z.re * self.plain_factor()).unwrap_or(f64::NAN)
    }

    /// Physical norm of the difference.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let diff = self.map_fibres(|k, f| {
            let mut g = f.clone();
            for (a, b) in g.values.iter_mut().zip(&other.fibres[k].values) {
                *a -= b;
            }
            g.source = None;
            Ok(g)
        })?;
        Ok(diff.norm_sqr().max(0.0).sqrt())
    }

    /// a·self + b·other; witnesses are dropped.
    pub fn lincomb(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        self.map_fibres(|k, f| {
            let values = f.values.iter().zip(&other.fibres[k].values).map(|(x, y)| a * x + b * y).collect();
            Ok(FibreVector { values, source: None, interp_error: f.interp_error.max(other.fibres[k].interp_error), ..f.clone() })
        })
    }

    /// Fibre-wise map, parallel over nodes, order preserved.
    pub fn map_fibres(&self, f: impl Fn(usize, &FibreVector) -> Result<FibreVector> + Sync) -> Result<Self> {
        let fibres = self.fibres.par_iter().enumerate().map(|(k, v)| f(k, v)).collect::<Result<Vec<_>>>()?;
        Ok(Self { fibres, ..self.clone() })
    }

    pub fn interp_error(&self) -> f64 {
        self.fibres.iter().map(|f| f.interp_error).fold(0.0, f64::max)
    }
}

/// Momentum picture on the grid of [`ThinTestFunction::momentum_grid`].
pub fn fourier_restrict(g: &ThinTestFunction, params: &MassShellParams, spec: &QuadratureSpec) -> Result<DirectIntegralVector> {
    let grid = if g.is_zero() {
        let d = params.transverse_dim();
        TransverseGrid::gauss_box(&vec![-1.0; d], &vec![1.0; d], spec.transverse_points_per_dim)
    } else {
        g.momentum_grid()?
    };
    fourier_restrict_on(g, params, &grid, spec)
}

/// Momentum picture on a caller-supplied 𝐩⊥ grid.
pub fn fourier_restrict_on(
    g: &ThinTestFunction,
    params: &MassShellParams,
    p_grid: &TransverseGrid,
    spec: &QuadratureSpec,
) -> Result<DirectIntegralVector> {
    params.validate()?;
    check_dims(g, params, p_grid)?;
    let terms = g.zero_mode_terms();
    if !terms.is_empty() {
        return Err(Error::ZeroModePresent { terms });
    }
    if params.mass == 0.0 && (0..p_grid.len()).any(|k| p_grid.node(k).iter().all(|p| *p == 0.0)) {
        return Err(Error::ZeroMassZeroMomentum);
    }
    let theta = ThetaGrid::from_spec(spec);
    let longitudinal: Vec<Vec<Complex64>> = g.terms.iter().map(|(u, _)| sample_transform(u, &theta)).collect();
    let fibres = (0..p_grid.len())
        .into_par_iter()
        .map(|k| {
            let p = p_grid.node(k);
            let coeffs: Vec<Complex64> = g
                .terms
                .iter()
                .map(|(_, vs)| vs.iter().zip(p).map(|(v, pd)| v.fourier(-pd)).product())
                .collect();
            let values = (0..theta.points)
                .map(|i| coeffs.iter().zip(&longitudinal).map(|(c, l)| c * l[i]).sum())
                .collect();
            FibreVector { grid: theta, values, source: None, interp_error: 0.0 }
        })
        .collect();
    Ok(DirectIntegralVector { representation: Representation::Momentum, params: *params, transverse: p_grid.clone(), fibres })
}

fn check_dims(g: &ThinTestFunction, params: &MassShellParams, grid: &TransverseGrid) -> Result<()> {
    if let Some(d) = g.transverse_dim() {
        if d != params.transverse_dim() {
            return Err(Error::InvalidInput(format!(
                "test function has {d} transverse factors, D − 1 = {}",
                params.transverse_dim()
            )));
        }
    }
    if grid.dim != params.transverse_dim() {
        return Err(Error::InvalidInput("transverse grid dimension does not match D − 1".into()));
    }
    Ok(())
}

/// Spatial picture directly from the fibre functions x₊ ↦ fibre_fn(𝐱⊥)(x₊).
/// Each fibre keeps its fibre function as witness.
pub fn spatial_from_fibres(
    params: &MassShellParams,
    x_grid: &TransverseGrid,
    spec: &QuadratureSpec,
    fibre_fn: impl Fn(&[f64]) -> SmoothFn1D + Sync,
) -> Result<DirectIntegralVector> {
    params.validate()?;
    if x_grid.dim != params.transverse_dim() {
        return Err(Error::InvalidInput("transverse grid dimension does not match D − 1".into()));
    }
    let theta = ThetaGrid::from_spec(spec);
    let fibres = (0..x_grid.len())
        .into_par_iter()
        .map(|k| FibreVector::from_source(&fibre_fn(x_grid.node(k)), theta))
        .collect();
    Ok(DirectIntegralVector { representation: Representation::Spatial, params: *params, transverse: x_grid.clone(), fibres })
}

/// Spatial picture of a thin test function; rejects zero modes.
pub fn spatial_restrict(
    g: &ThinTestFunction,
    params: &MassShellParams,
    x_grid: &TransverseGrid,
    spec: &QuadratureSpec,
) -> Result<DirectIntegralVector> {
    check_dims(g, params, x_grid)?;
    let terms = g.zero_mode_terms();
    if !terms.is_empty() {
        return Err(Error::ZeroModePresent { terms });
    }
    spatial_from_fibres(params, x_grid, spec, |x| g.fibre_function(x))
}

/// g̃(θ′, 𝐱) = (2π)^{−(D−1)} ∫ e^{i𝐱·𝐩⊥} ĝ(θ′, 𝐩⊥) d𝐩⊥ at the nodes of `x_grid`.
pub fn to_spatial(v: &DirectIntegralVector, x_grid: &TransverseGrid) -> Result<DirectIntegralVector> {
    if v.representation != Representation::Momentum {
        return Err(Error::InvalidInput("to_spatial expects the momentum picture".into()));
    }
    let scale = (2.0 * PI).powi(-(v.params.transverse_dim() as i32));
    let out = transverse_transform(v, x_grid, 1.0, scale)?;
    Ok(DirectIntegralVector { representation: Representation::Spatial, ..out })
}

/// ĝ(θ′, 𝐩) = ∫ e^{−i𝐱·𝐩} g̃(θ′, 𝐱) d𝐱 at the nodes of `p_grid`.
pub fn to_momentum(v: &DirectIntegralVector, p_grid: &TransverseGrid) -> Result<DirectIntegralVector> {
    if v.representation != Representation::Spatial {
        return Err(Error::InvalidInput("to_momentum expects the spatial picture".into()));
    }
    let out = transverse_transform(v, p_grid, -1.0, 1.0)?;
    Ok(DirectIntegralVector { representation: Representation::Momentum, ..out })
}

fn transverse_transform(v: &DirectIntegralVector, target: &TransverseGrid, sign: f64, scale: f64) -> Result<DirectIntegralVector> {
    if target.dim != v.transverse.dim {
        return Err(Error::InvalidInput("target grid has the wrong dimension".into()));
    }
    let theta = v.grid();
    let src = &v.transverse;
    let fibres = (0..target.len())
        .into_par_iter()
        .map(|j| {
            let y = target.node(j);
            let phases: Vec<Complex64> = (0..src.len())
                .map(|k| {
                    let dot: f64 = y.iter().zip(src.node(k)).map(|(a, b)| a * b).sum();
                    Complex64::from_polar(src.weights[k] * scale, sign * dot)
                })
                .collect();
            let values = (0..theta.points)
                .map(|i| {
                    let mut re = CompensatedSum::default();
                    let mut im = CompensatedSum::default();
                    for (ph, f) in phases.iter().zip(&v.fibres) {
                        let z = ph * f.values[i];
                        re.add(z.re);
                        im.add(z.im);
                    }
                    Complex64::new(re.value(), im.value())
                })
                .collect();
            FibreVector { grid: theta, values, source: None, interp_error: 0.0 }
        })
        .collect();
    Ok(DirectIntegralVector { representation: v.representation, params: v.params, transverse: target.clone(), fibres })
}

/// (U(Λ(α), 𝔱(a₊))ξ)(θ′, ·) = e^{ia₊e^{−θ′}} ξ(θ′ − α, ·), fibre by fibre.
pub fn boost_translate(v: &DirectIntegralVector, alpha: f64, a_plus: f64, spec: &QuadratureSpec) -> Result<DirectIntegralVector> {
    v.map_fibres(|_, f| crate::fibre::u1_act(f, alpha, a_plus, spec))
}

/// Per-term zero-mode report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroModeReport {
    /// ∫u dx₊ for each term.
    pub term_means: Vec<f64>,
    pub offending_terms: Vec<usize>,
    /// (Θ, ∫_{−Θ}^{Θ}∫|ĝ|² dθ′ d𝐩⊥) on the requested cutoffs.
    pub truncated_norms: Vec<(f64, f64)>,
    /// ∫|ĝ(0, 𝐩⊥)|² d𝐩⊥, the asymptotic growth rate of the truncated norm.
    pub zero_mode_weight: f64,
}

/// Term means and the truncated-norm growth of ‖Eg₀‖²_Θ.
pub fn zero_mode_diagnose(
    g: &ThinTestFunction,
    params: &MassShellParams,
    cutoffs: &[f64],
    spec: &QuadratureSpec,
) -> Result<ZeroModeReport> {
    params.validate()?;
    let term_means = g.terms.iter().map(|(u, _)| u.integral(spec)).collect::<Result<Vec<_>>>()?;
    let offending_terms = g.zero_mode_terms();
    let Some(x_grid) = g.spatial_grid(spec).ok() else {
        return Ok(ZeroModeReport { term_means, offending_terms, truncated_norms: vec![], zero_mode_weight: 0.0 });
    };
    check_dims(g, params, &x_grid)?;
    let theta_max = cutoffs.iter().cloned().fold(spec.theta_cutoff, f64::max);
    let h = ThetaGrid::from_spec(spec).spacing();
    let half = (theta_max / h).ceil() as usize;
    let grid = ThetaGrid::new(-(half as f64) * h, half as f64 * h, 2 * half + 1)?;
    let factor = (2.0 * PI).powi(params.transverse_dim() as i32);
    let fibres: Vec<(Vec<f64>, f64)> = (0..x_grid.len())
        .into_par_iter()
        .map(|k| {
            let f = g.fibre_function(x_grid.node(k));
            let sq = sample_transform(&f, &grid).iter().map(|z| z.norm_sqr()).collect();
            let mean = f.integral(spec).unwrap_or(f64::NAN);
            (sq, mean * mean)
        })
        .collect();
    let profile: Vec<f64> = (0..grid.points).map(|i| factor * x_grid.integrate(fibres.iter().map(|f| f.0[i]))).collect();
    let zero_mode_weight = factor * x_grid.integrate(fibres.iter().map(|f| f.1));
    let truncated_norms = cutoffs
        .iter()
        .map(|&c| {
            let m = (c / h).round() as usize;
            let window = &profile[half - m..=half + m];
            let mut acc = CompensatedSum::default();
            for (i, v) in window.iter().enumerate() {
                acc.add(if i == 0 || i == window.len() - 1 { 0.5 * v } else { *v });
            }
            (m as f64 * h, h * acc.value())
        })
        .collect();
    Ok(ZeroModeReport { term_means, offending_terms, truncated_norms, zero_mode_weight })
}

/// ‖Eg₀‖² from the Lorentz-invariant measure d^Dp/ω in (p₁, 𝐩⊥) coordinates,
/// p₋ = (ω − p₁)/√2, integrated in p₁ on panels ±[2^k, 2^{k+1}], k ∈ [−20, 40).
/// Uses the same 𝐩⊥ nodes as the momentum vector it is compared with.
pub fn momentum_measure_norm(g: &ThinTestFunction, params: &MassShellParams, p_grid: &TransverseGrid) -> Result<f64> {
    params.validate()?;
    check_dims(g, params, p_grid)?;
    let terms = g.zero_mode_terms();
    if !terms.is_empty() {
        return Err(Error::ZeroModePresent { terms });
    }
    let widths = || g.terms.iter().flat_map(|(u, _)| u.terms.iter().map(|(_, b)| b.half_width));
    let w_min = widths().fold(f64::INFINITY, f64::min);
    let w_max = widths().fold(0.0, f64::max);
    let rule = gl16();
    let per_node = (0..p_grid.len())
        .into_par_iter()
        .map(|k| {
            let p_perp = p_grid.node(k);
            let mt2 = params.mass * params.mass + p_perp.iter().map(|p| p * p).sum::<f64>();
            if mt2 == 0.0 {
                return Err(Error::ZeroMassZeroMomentum);
            }
            let transverse: Vec<Complex64> =
                g.terms.iter().map(|(_, vs)| vs.iter().zip(p_perp).map(|(v, p)| v.fourier(-p)).product()).collect();
            let p_minus = |p1: f64| {
                let om = (mt2 + p1 * p1).sqrt();
                if p1 > 0.0 { mt2 / (SQRT_2 * (om + p1)) } else { (om - p1) / SQRT_2 }
            };
            let integrand = |p1: f64| {
                let pm = p_minus(p1);
                let z: Complex64 = g.terms.iter().zip(&transverse).map(|((u, _), t)| u.fourier(pm) * t).sum();
                z.norm_sqr() / (mt2 + p1 * p1).sqrt()
            };
            let mut acc = CompensatedSum::default();
            let mut panel = |a: f64, b: f64| {
                // p₋ decreases in p₁; skip panels where ĝ vanishes or is O(p₋w) below 1e−9
                let (hi, lo) = (p_minus(a), p_minus(b));
                if lo * w_min >= PROFILE_Q_MAX || hi * w_max < 1e-9 {
                    return;
                }
                // subdivide so each piece spans at most 6 in the scaled frequency p₋w
                let span = (hi * w_min).min(300.0) - (lo * w_min).min(300.0);
                let pieces = 1 + (span / 6.0).ceil() as usize;
                acc.add(rule.composite(a, b, pieces, integrand));
            };
            panel(-(2f64.powi(-20)), 2f64.powi(-20));
            for e in -20..40 {
                let (a, b) = (2f64.powi(e), 2f64.powi(e + 1));
                panel(a, b);
                panel(-b, -a);
            }
            Ok(acc.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(p_grid.integrate(per_node))
}

