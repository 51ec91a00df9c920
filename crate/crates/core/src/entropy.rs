//! Relative entropy of coherent states for null cuts.
//!
//! A BMT state is fixed by a real smooth h(x₊, 𝐱⊥). Its entropy for the
//! region N_C is π∫∫_{x₊>C}(x₊ − C)h² and every derivative along a deformation
//! C + tA is again a direct integral of h², so all quantities below reduce to
//! one-dimensional quadratures per transverse node followed by a compensated
//! transverse sum in node order.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::nullcut::{distorted_translate, CutProfile, CutSurface, Lower, Upper};
use crate::numerics::{integrate_piecewise, QuadratureSpec, SmoothBump, SmoothFn1D, TransverseGrid};
use crate::oneparticle::{spatial_from_fibres, DirectIntegralVector, MassShellParams, ThinTestFunction};
use crate::{Error, Result};

/// Step of the central difference in the Weyl-overlap route of [`anec_identity`].
pub const OVERLAP_STEP: f64 = 1e-4;

/// Coherent state ω∘β_h.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BMTState {
    pub h: ThinTestFunction,
}

impl BMTState {
    pub fn new(h: ThinTestFunction) -> Result<Self> {
        h.validate()?;
        Ok(Self { h })
    }

    /// G(x₊, 𝐱⊥) = ∫_{−∞}^{x₊} h(s, 𝐱⊥) ds.
    pub fn primitive(&self, x_plus: f64, x_perp: &[f64], spec: &QuadratureSpec) -> Result<f64> {
        self.h.fibre_function(x_perp).primitive(x_plus, spec)
    }

    /// h with every non-zero-mean longitudinal factor u replaced by
    /// u − (∫u)·b₀/∫b₀, where b₀ is a unit bump centred at `floor − 1.5`.
    /// The flag reports whether anything was subtracted.
    pub fn compensated(&self, floor: f64, spec: &QuadratureSpec) -> Result<(ThinTestFunction, bool)> {
        let b0 = SmoothFn1D::single(SmoothBump::new(floor - 1.5, 1.0, 1.0, 0)?);
        let norm = b0.integral(spec)?;
        let mut changed = false;
        let mut terms = Vec::with_capacity(self.h.terms.len());
        for (u, vs) in &self.h.terms {
            let mean = u.integral(spec)?;
            if mean != 0.0 && !vs.iter().any(|v| v.is_zero()) {
                changed = true;
                terms.push((u.add(&b0.scale(-mean / norm)), vs.clone()));
            } else {
                terms.push((u.clone(), vs.clone()));
            }
        }
        Ok((ThinTestFunction { terms }, changed))
    }

    /// Spatial-picture one-particle vector of the compensated h on `x_grid`.
    /// The zero mode is removed numerically, so the structural check of
    /// [`crate::oneparticle::spatial_restrict`] is bypassed.
    pub fn one_particle_vector(
        &self,
        floor: f64,
        params: &MassShellParams,
        x_grid: &TransverseGrid,
        spec: &QuadratureSpec,
    ) -> Result<(DirectIntegralVector, bool)> {
        let (h, changed) = self.compensated(floor, spec)?;
        Ok((spatial_from_fibres(params, x_grid, spec, |x| h.fibre_function(x))?, changed))
    }
}

/// Outcome of [`nullcut_entropy`]. S′ and S″ are taken along A ≡ 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_prime")]
    pub s_prime: f64,
    #[serde(rename = "S_double_prime")]
    pub s_double_prime: f64,
    pub per_fibre: Vec<(Vec<f64>, f64)>,
    pub quadrature_error: f64,
    pub identity_residuals: BTreeMap<String, f64>,
    /// Residuals reported for information only.
    pub flagged: Vec<String>,
}

/// h sampled fibre by fibre on a transverse rule.
struct Fibres {
    grid: TransverseGrid,
    funcs: Vec<SmoothFn1D>,
}

impl Fibres {
    /// Composite transverse rule split at the support edges of h and at the
    /// edges reported by the cuts.
    fn new(h: &ThinTestFunction, cuts: &[&dyn CutSurface], points: usize) -> Self {
        let grid = match h.transverse_breakpoints() {
            Some(mut breaks) => {
                for (d, axis) in breaks.iter_mut().enumerate() {
                    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
                    axis.extend(cuts.iter().flat_map(|c| c.breakpoints(d)).filter(|x| *x > lo && *x < hi));
                    axis.sort_by(f64::total_cmp);
                    axis.dedup();
                }
                TransverseGrid::gauss_pieces(&breaks, points)
            }
            None => TransverseGrid { dim: h.transverse_dim().unwrap_or(1), coords: vec![], weights: vec![] },
        };
        let funcs = (0..grid.len()).map(|k| h.fibre_function(grid.node(k))).collect();
        Self { grid, funcs }
    }

    fn heights<C: CutSurface + ?Sized>(&self, c: &C) -> Vec<f64> {
        (0..self.grid.len()).map(|k| c.height(self.grid.node(k))).collect()
    }

    /// Per-node values of `f(k, fibre)`, computed in parallel, kept in order.
    fn map(&self, f: impl Fn(usize, &SmoothFn1D) -> Result<f64> + Sync) -> Result<Vec<f64>> {
        self.funcs.par_iter().enumerate().map(|(k, u)| f(k, u)).collect()
    }

    fn entropies(&self, cuts: &[f64], spec: &QuadratureSpec) -> Result<Vec<f64>> {
        self.map(|k, u| halfline(u, cuts[k], spec))
    }
}

fn halfline(u: &SmoothFn1D, c: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(PI * u.weighted_square_integral(c, f64::INFINITY, |x| x - c, spec)?)
}

fn square_above(u: &SmoothFn1D, c: f64, spec: &QuadratureSpec) -> Result<f64> {
    u.weighted_square_integral(c, f64::INFINITY, |_| 1.0, spec)
}

/// Deformation profiles must satisfy A ≥ 0 on the grid, flagged or not.
fn require_nonneg(a: &CutProfile, grid: &TransverseGrid) -> Result<()> {
    match (0..grid.len()).find(|&k| a.eval(grid.node(k)) < 0.0) {
        Some(k) => Err(Error::InvalidInput(format!(
            "deformation profile is {} < 0 at x⊥ = {:?}",
            a.eval(grid.node(k)),
            grid.node(k)
        ))),
        None => Ok(()),
    }
}

/// S for the cut C, with the A ≡ 1 derivatives and a half-resolution
/// transverse rule as error estimate.
pub fn nullcut_entropy<C: CutSurface>(state: &BMTState, c: &C, spec: &QuadratureSpec) -> Result<EntropyReport> {
    let fib = Fibres::new(&state.h, &[c], spec.transverse_points_per_dim);
    let cuts = fib.heights(c);
    let per = fib.entropies(&cuts, spec)?;
    let s = fib.grid.integrate(per.iter().copied());

    let coarse = Fibres::new(&state.h, &[c], (spec.transverse_points_per_dim / 2).max(8));
    let coarse_cuts = coarse.heights(c);
    let s_coarse = coarse.grid.integrate(coarse.entropies(&coarse_cuts, spec)?);
    let fibre_tol = fib.grid.integrate(per.iter().map(|v| spec.tolerance(*v)));

    let above = fib.map(|k, u| square_above(u, cuts[k], spec))?;
    let energy = fib.grid.integrate(above.iter().copied());
    let s_prime = -PI * energy;
    let s_double_prime = PI * fib.grid.integrate(fib.funcs.iter().zip(&cuts).map(|(u, c)| u.eval(*c).powi(2)));

    let mut identity_residuals = BTreeMap::new();
    identity_residuals.insert("transverse_half_rule".to_string(), (s - s_coarse).abs());
    // S′ − E with E taken positive and without the π: informational only
    identity_residuals.insert("unsigned_dS_equals_E".to_string(), s_prime - energy);
    Ok(EntropyReport {
        s,
        s_prime,
        s_double_prime,
        per_fibre: (0..fib.grid.len()).map(|k| (fib.grid.node(k).to_vec(), per[k])).collect(),
        quadrature_error: (s - s_coarse).abs() + fibre_tol,
        identity_residuals,
        flagged: vec!["unsigned_dS_equals_E".to_string()],
    })
}

/// Closed-form (S′(t), S″(t)) along C + tA.
pub fn entropy_derivatives(
    state: &BMTState,
    c: &CutProfile,
    a: &CutProfile,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let fib = Fibres::new(&state.h, &[c, a], spec.transverse_points_per_dim);
    require_nonneg(a, &fib.grid)?;
    let (cs, as_) = (fib.heights(c), fib.heights(a));
    derivatives_on(&fib, &cs, &as_, t, spec)
}

fn derivatives_on(fib: &Fibres, cs: &[f64], as_: &[f64], t: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let above = fib.map(|k, u| if as_[k] == 0.0 { Ok(0.0) } else { square_above(u, cs[k] + t * as_[k], spec) })?;
    let s1 = -PI * fib.grid.integrate(above.iter().zip(as_).map(|(e, a)| a * e));
    Ok((s1, second_derivative(fib, cs, as_, t)))
}

fn second_derivative(fib: &Fibres, cs: &[f64], as_: &[f64], t: f64) -> f64 {
    PI * fib.grid.integrate((0..fib.funcs.len()).map(|k| {
        let a = as_[k];
        if a == 0.0 {
            0.0
        } else {
            (a * fib.funcs[k].eval(cs[k] + t * a)).powi(2)
        }
    }))
}

/// One point of a QNEC sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QnecPoint {
    pub t: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_prime")]
    pub s_prime: f64,
    #[serde(rename = "S_double_prime")]
    pub s_double_prime: f64,
    /// S″ measured against the −1e−10 floor.
    pub qnec_margin: f64,
    /// S″ below `abs_tol`: the inequality holds with equality.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QnecSweep {
    pub points: Vec<QnecPoint>,
    pub holds: bool,
    pub min_s_double_prime: f64,
}

/// Tolerated negative S″.
pub const QNEC_FLOOR: f64 = -1e-10;

/// S, S′ and S″ of C + tA on `t_grid`.
pub fn qnec_sweep(
    state: &BMTState,
    c: &CutProfile,
    a: &CutProfile,
    t_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<QnecSweep> {
    let fib = Fibres::new(&state.h, &[c, a], spec.transverse_points_per_dim);
    require_nonneg(a, &fib.grid)?;
    let (cs, as_) = (fib.heights(c), fib.heights(a));
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let cut: Vec<f64> = cs.iter().zip(&as_).map(|(c, a)| c + t * a).collect();
        let s = fib.grid.integrate(fib.entropies(&cut, spec)?);
        let (s1, s2) = derivatives_on(&fib, &cs, &as_, t, spec)?;
        points.push(QnecPoint {
            t,
            s,
            s_prime: s1,
            s_double_prime: s2,
            qnec_margin: s2 - QNEC_FLOOR,
            saturated: s2 < spec.abs_tol,
        });
    }
    let min = points.iter().map(|p| p.s_double_prime).fold(f64::INFINITY, f64::min);
    Ok(QnecSweep { holds: points.iter().all(|p| p.s_double_prime >= QNEC_FLOOR), min_s_double_prime: min, points })
}

/// E_A(N_C) = ∫A(𝐱⊥)∫_{C(𝐱⊥)}^∞ h² dx₊ d𝐱⊥.
pub fn energy_null_cut(state: &BMTState, a: &CutProfile, c: &CutProfile, spec: &QuadratureSpec) -> Result<f64> {
    let fib = Fibres::new(&state.h, &[c, a], spec.transverse_points_per_dim);
    require_nonneg(a, &fib.grid)?;
    let (cs, as_) = (fib.heights(c), fib.heights(a));
    let above = fib.map(|k, u| if as_[k] == 0.0 { Ok(0.0) } else { square_above(u, cs[k], spec) })?;
    Ok(fib.grid.integrate(above.iter().zip(&as_).map(|(e, a)| a * e)))
}

/// ⟨w(ξ)Ω, w(η)Ω⟩ = exp(−½(‖ξ‖² + ‖η‖²) + ⟨ξ, η⟩).
pub fn weyl_overlap(xi: &DirectIntegralVector, eta: &DirectIntegralVector) -> Result<Complex64> {
    let z = xi.inner(eta)?;
    Ok((z - 0.5 * (xi.norm_sqr() + eta.norm_sqr())).exp())
}

/// The three routes to the averaged null energy of the coherent state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnecReport {
    /// (1/2π)∫S″(t) dt.
    pub route_a: f64,
    /// ½∫∫A h².
    pub route_b: f64,
    /// −i d/ds at s = 0 of the Weyl overlap with Γ(U_A(s)).
    pub route_c: f64,
    /// Imaginary part left over in route (c).
    pub route_c_imag: f64,
    pub rel_ab: f64,
    pub rel_cb: f64,
    pub t_window: (f64, f64),
    /// h had a zero mode and was compensated below the cut.
    pub compensated: bool,
}

fn relative(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        x.abs()
    } else {
        (x - reference).abs() / reference.abs()
    }
}

/// ANEC chain for the deformation C + tA. All routes use h after zero-mode
/// compensation below min C, so they describe the same one-particle vector.
pub fn anec_identity(
    state: &BMTState,
    c: &CutProfile,
    a: &CutProfile,
    params: &MassShellParams,
    spec: &QuadratureSpec,
) -> Result<AnecReport> {
    let probe = Fibres::new(&state.h, &[c, a], spec.transverse_points_per_dim);
    if probe.grid.is_empty() {
        return Ok(AnecReport {
            route_a: 0.0,
            route_b: 0.0,
            route_c: 0.0,
            route_c_imag: 0.0,
            rel_ab: 0.0,
            rel_cb: 0.0,
            t_window: (0.0, 0.0),
            compensated: false,
        });
    }
    require_nonneg(a, &probe.grid)?;
    let floor = c.min_on(&probe.grid);
    let (h, compensated) = state.compensated(floor, spec)?;
    let fib = Fibres::new(&h, &[c, a], spec.transverse_points_per_dim);
    let (cs, as_) = (fib.heights(c), fib.heights(a));

    let mass = fib.map(|_, u| u.weighted_square_integral(f64::NEG_INFINITY, f64::INFINITY, |_| 1.0, spec))?;
    let energies: Vec<f64> = mass.iter().zip(&as_).map(|(m, a)| a * m).collect();
    let route_b = 0.5 * fib.grid.integrate(energies.iter().copied());

    let (route_a, t_window) = route_a(&fib, &cs, &as_, &energies, spec)?;

    let (v, _) = BMTState { h: h.clone() }.one_particle_vector(floor, params, &fib.grid, spec)?;
    let shifted = |s: f64| distorted_translate(&v, &a.scale(s));
    let up = weyl_overlap(&v, &shifted(OVERLAP_STEP)?)?;
    let down = weyl_overlap(&v, &shifted(-OVERLAP_STEP)?)?;
    let derivative = (up - down) / (2.0 * OVERLAP_STEP) * Complex64::new(0.0, -1.0);

    Ok(AnecReport {
        route_a,
        route_b,
        route_c: derivative.re,
        route_c_imag: derivative.im,
        rel_ab: relative(route_a, route_b),
        rel_cb: relative(derivative.re, route_b),
        t_window,
        compensated,
    })
}

/// t-quadrature of S″ between the images of the support edges of every fibre
/// that carries energy, split at those images.
fn route_a(fib: &Fibres, cs: &[f64], as_: &[f64], energies: &[f64], spec: &QuadratureSpec) -> Result<(f64, (f64, f64))> {
    let total: f64 = energies.iter().map(|e| e.abs()).sum();
    if total == 0.0 {
        return Ok((0.0, (0.0, 0.0)));
    }
    let mut edges = Vec::new();
    for k in 0..fib.funcs.len() {
        if as_[k] <= 0.0 || energies[k] < 1e-13 * total {
            continue;
        }
        if let Some((lo, hi)) = fib.funcs[k].support() {
            edges.push((lo - cs[k]) / as_[k]);
            edges.push((hi - cs[k]) / as_[k]);
        }
    }
    let lo = edges.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = edges.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.2 * (hi - lo);
    let window = (lo - pad, hi + pad);
    edges.push(window.0);
    edges.push(window.1);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let integral = integrate_piecewise(|t| second_derivative(fib, cs, as_, t), &edges, spec)?;
    Ok((integral / (2.0 * PI), window))
}

/// S(C₁ ∨ C₂) + S(C₁ ∧ C₂) − S(C₁) − S(C₂) with pointwise min and max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperadditivityReport {
    pub s1: f64,
    pub s2: f64,
    pub s_union: f64,
    pub s_intersection: f64,
    pub residual: f64,
    /// |residual| / max S.
    pub relative: f64,
}

pub fn superadditivity_check(
    state: &BMTState,
    c1: &CutProfile,
    c2: &CutProfile,
    spec: &QuadratureSpec,
) -> Result<SuperadditivityReport> {
    let s1 = nullcut_entropy(state, c1, spec)?.s;
    let s2 = nullcut_entropy(state, c2, spec)?.s;
    let s_union = nullcut_entropy(state, &Lower(c1, c2), spec)?.s;
    let s_intersection = nullcut_entropy(state, &Upper(c1, c2), spec)?.s;
    let residual = s_union + s_intersection - s1 - s2;
    let scale = [s1, s2, s_union, s_intersection].into_iter().fold(0.0, f64::max);
    Ok(SuperadditivityReport {
        s1,
        s2,
        s_union,
        s_intersection,
        residual,
        relative: if scale > 0.0 { residual.abs() / scale } else { residual.abs() },
    })
}
