//! Null cuts N_C = {x₊ > C(𝐱⊥)} and the fibre-wise structure of H(N_C).
//!
//! Every operation here acts on the spatial picture one transverse node at a
//! time: the distorted translation T_C, the distorted dilation D_C, the modular
//! flow Ad T_C(Δ₀^{it}) and its generator. Nothing mixes fibres.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fibre::{modular_flow_halfline, FibreVector};
use crate::numerics::{spectral_diff, QuadratureSpec, SmoothBump, SmoothFn1D, TransverseGrid};
use crate::oneparticle::{spatial_restrict, DirectIntegralVector, MassShellParams, Representation, ThinTestFunction};
use crate::{Error, Result};

/// Anything that assigns a cut height to a transverse point.
pub trait CutSurface: Sync {
    fn height(&self, x_perp: &[f64]) -> f64;

    /// Points along `axis` where the surface stops being analytic.
    fn breakpoints(&self, _axis: usize) -> Vec<f64> {
        Vec::new()
    }
}

/// One product bump c·∏_d b_d(x_d) of a cut profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBump {
    pub coefficient: f64,
    /// One factor per transverse coordinate.
    pub factors: Vec<SmoothBump>,
}

impl ProfileBump {
    pub fn eval(&self, x_perp: &[f64]) -> f64 {
        self.coefficient * self.factors.iter().zip(x_perp).map(|(b, x)| b.eval(*x)).product::<f64>()
    }
}

/// C(𝐱⊥) = base + Σ bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutProfile {
    pub base: f64,
    #[serde(default)]
    pub bumps: Vec<ProfileBump>,
    /// Declares C ≥ 0; enforced by [`CutProfile::check_nonneg`].
    #[serde(default)]
    pub nonneg_flag: bool,
}

impl CutSurface for CutProfile {
    fn height(&self, x_perp: &[f64]) -> f64 {
        self.eval(x_perp)
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        self.bumps.iter().filter_map(|b| b.factors.get(axis)).flat_map(|f| [f.support().0, f.support().1]).collect()
    }
}

impl CutProfile {
    pub fn new(base: f64, bumps: Vec<ProfileBump>) -> Result<Self> {
        let c = Self { base, bumps, nonneg_flag: false };
        c.validate()?;
        Ok(c)
    }

    pub fn constant(base: f64) -> Self {
        Self { base, bumps: Vec::new(), nonneg_flag: false }
    }

    /// A profile flagged nonnegative, checked on the nodes of `grid`.
    pub fn nonneg(base: f64, bumps: Vec<ProfileBump>, grid: &TransverseGrid) -> Result<Self> {
        let c = Self { base, bumps, nonneg_flag: true };
        c.validate()?;
        c.check_nonneg(grid)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base.is_finite() {
            return Err(Error::InvalidInput("profile base must be finite".into()));
        }
        let dims: Vec<usize> = self.bumps.iter().map(|b| b.factors.len()).collect();
        if dims.iter().any(|d| *d == 0 || *d != dims[0]) {
            return Err(Error::InvalidInput("profile bumps need one factor per transverse coordinate".into()));
        }
        for b in &self.bumps {
            if !b.coefficient.is_finite() {
                return Err(Error::InvalidInput("profile coefficient must be finite".into()));
            }
            for f in &b.factors {
                f.validate()?;
            }
        }
        Ok(())
    }

    /// Number of transverse coordinates the bumps expect, if any.
    pub fn transverse_dim(&self) -> Option<usize> {
        self.bumps.first().map(|b| b.factors.len())
    }

    pub fn eval(&self, x_perp: &[f64]) -> f64 {
        self.base + self.bumps.iter().map(|b| b.eval(x_perp)).sum::<f64>()
    }

    /// Fails unless the flag is off or C ≥ 0 at every node of `grid`.
    pub fn check_nonneg(&self, grid: &TransverseGrid) -> Result<()> {
        if !self.nonneg_flag {
            return Ok(());
        }
        match (0..grid.len()).find(|&k| self.eval(grid.node(k)) < 0.0) {
            Some(k) => Err(Error::InvalidInput(format!(
                "profile flagged nonnegative is {} at x⊥ = {:?}",
                self.eval(grid.node(k)),
                grid.node(k)
            ))),
            None => Ok(()),
        }
    }

    pub fn min_on(&self, grid: &TransverseGrid) -> f64 {
        (0..grid.len()).map(|k| self.eval(grid.node(k))).fold(f64::INFINITY, f64::min)
    }

    pub fn max_on(&self, grid: &TransverseGrid) -> f64 {
        (0..grid.len()).map(|k| self.eval(grid.node(k))).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            base: k * self.base,
            bumps: self.bumps.iter().map(|b| ProfileBump { coefficient: k * b.coefficient, ..b.clone() }).collect(),
            nonneg_flag: self.nonneg_flag && k >= 0.0,
        }
    }

    /// The deformed cut C + tA.
    pub fn deform(&self, t: f64, a: &CutProfile) -> Self {
        let tail = a.scale(t);
        let mut bumps = self.bumps.clone();
        bumps.extend(tail.bumps);
        Self { base: self.base + tail.base, bumps, nonneg_flag: false }
    }
}

/// Pointwise minimum, the cut of the union N_{C₁} ∪ N_{C₂}.
pub struct Lower<'a, A: CutSurface + ?Sized, B: CutSurface + ?Sized>(pub &'a A, pub &'a B);

/// Pointwise maximum, the cut of the intersection N_{C₁} ∩ N_{C₂}.
pub struct Upper<'a, A: CutSurface + ?Sized, B: CutSurface + ?Sized>(pub &'a A, pub &'a B);

impl<A: CutSurface + ?Sized, B: CutSurface + ?Sized> CutSurface for Lower<'_, A, B> {
    fn height(&self, x: &[f64]) -> f64 {
        self.0.height(x).min(self.1.height(x))
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        [self.0.breakpoints(axis), self.1.breakpoints(axis)].concat()
    }
}

impl<A: CutSurface + ?Sized, B: CutSurface + ?Sized> CutSurface for Upper<'_, A, B> {
    fn height(&self, x: &[f64]) -> f64 {
        self.0.height(x).max(self.1.height(x))
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        [self.0.breakpoints(axis), self.1.breakpoints(axis)].concat()
    }
}

/// A spatial-picture vector together with the cut it is claimed to live above.
#[derive(Debug, Clone, PartialEq)]
pub struct NullCutVector {
    pub vector: DirectIntegralVector,
    pub cut: CutProfile,
}

impl NullCutVector {
    /// Checks the representation and, where witnesses exist, that each one is
    /// supported in (C(𝐱⊥), ∞).
    pub fn new(vector: DirectIntegralVector, cut: CutProfile) -> Result<Self> {
        require_spatial(&vector)?;
        for (k, f) in vector.fibres.iter().enumerate() {
            let x = vector.transverse.node(k);
            if let Some((lo, _)) = f.source.as_ref().and_then(|s| s.support()) {
                let c = cut.eval(x);
                if lo < c {
                    return Err(Error::InvalidInput(format!("witness at x⊥ = {x:?} starts at {lo}, below the cut {c}")));
                }
            }
        }
        Ok(Self { vector, cut })
    }

    /// Vector of a thin test function supported above `cut`.
    pub fn from_thin(
        g: &ThinTestFunction,
        cut: CutProfile,
        params: &MassShellParams,
        x_grid: &TransverseGrid,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        Self::new(spatial_restrict(g, params, x_grid, spec)?, cut)
    }
}

fn require_spatial(v: &DirectIntegralVector) -> Result<()> {
    if v.representation != Representation::Spatial {
        return Err(Error::InvalidInput("null-cut operations need the spatial picture".into()));
    }
    Ok(())
}

/// (T_C ξ)(θ′, 𝐱⊥) = e^{iC(𝐱⊥)e^{−θ′}} ξ(θ′, 𝐱⊥).
pub fn distorted_translate<C: CutSurface + ?Sized>(v: &DirectIntegralVector, c: &C) -> Result<DirectIntegralVector> {
    require_spatial(v)?;
    v.map_fibres(|k, f| Ok(f.translate(c.height(v.transverse.node(k)))))
}

/// (D_C ξ)(θ′, 𝐱⊥) = ξ(θ′ − C(𝐱⊥), 𝐱⊥).
pub fn distorted_dilate<C: CutSurface + ?Sized>(
    v: &DirectIntegralVector,
    c: &C,
    spec: &QuadratureSpec,
) -> Result<DirectIntegralVector> {
    require_spatial(v)?;
    v.map_fibres(|k, f| f.dilate(c.height(v.transverse.node(k)), spec))
}

/// Δ^{−is} of H(N_C): on fibre 𝐱⊥ the half-line flow of (C(𝐱⊥), ∞), so that
/// witnesses move as x₊ ↦ C + e^{2πs}(x₊ − C).
pub fn modular_flow_nullcut<C: CutSurface + ?Sized>(
    v: &NullCutVector,
    c: &C,
    s: f64,
    spec: &QuadratureSpec,
) -> Result<NullCutVector> {
    let vector = v.vector.map_fibres(|k, f| modular_flow_halfline(f, -s, c.height(v.vector.transverse.node(k)), spec))?;
    Ok(NullCutVector { vector, cut: v.cut.clone() })
}

/// The witness image under [`modular_flow_nullcut`] at cut height `c`.
pub fn flow_witness(source: &SmoothFn1D, c: f64, s: f64) -> SmoothFn1D {
    source.translate(-c).dilate_translate(2.0 * PI * s, c)
}

/// log Δ of H(N_C) applied fibre-wise: −2πi∂_θ′ ξ + 2πC(𝐱⊥)e^{−θ′}ξ.
pub fn modular_generator_apply<C: CutSurface + ?Sized>(
    v: &NullCutVector,
    c: &C,
    spec: &QuadratureSpec,
) -> Result<DirectIntegralVector> {
    let grid = v.vector.grid();
    v.vector.map_fibres(|k, f| {
        let shift = 2.0 * PI * c.height(v.vector.transverse.node(k));
        let d = spectral_diff(&f.values, &grid, spec)?;
        let values = grid
            .nodes()
            .zip(&f.values)
            .zip(&d)
            .map(|((th, x), dx)| Complex64::new(0.0, -2.0 * PI) * dx + shift * (-th).exp() * x)
            .collect();
        Ok(FibreVector { grid, values, source: None, interp_error: f.interp_error })
    })
}

/// Support transport under Δ_{H(N_{C₁})}^{−is}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HsmiReport {
    /// (s, min over fibres of image lower edge − C₂).
    pub margins: Vec<(f64, f64)>,
    pub all_positive: bool,
    pub non_decreasing: bool,
}

/// Checks that the modular flow of the larger cut region keeps the witnesses of
/// g above the smaller one.
pub fn hsmi_support_witness(
    c1: &CutProfile,
    c2: &CutProfile,
    g: &ThinTestFunction,
    s_grid: &[f64],
    x_grid: &TransverseGrid,
) -> Result<HsmiReport> {
    if let Some(k) = (0..x_grid.len()).find(|&k| c1.eval(x_grid.node(k)) >= c2.eval(x_grid.node(k))) {
        let x = x_grid.node(k);
        return Err(Error::ProfileOrderViolation { at: x.to_vec(), gap: c1.eval(x) - c2.eval(x) });
    }
    if let Some(&s) = s_grid.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::InvalidInput(format!("HSMI flow parameters must be ≥ 0, got {s}")));
    }
    let fibres: Vec<(usize, SmoothFn1D)> = (0..x_grid.len())
        .map(|k| (k, g.fibre_function(x_grid.node(k))))
        .filter(|(_, f)| f.support().is_some())
        .collect();
    for (k, f) in &fibres {
        let x = x_grid.node(*k);
        if f.support().is_some_and(|(lo, _)| lo < c2.eval(x)) {
            return Err(Error::InvalidInput(format!("test function is not supported above C₂ at x⊥ = {x:?}")));
        }
    }
    let margins: Vec<(f64, f64)> = s_grid
        .iter()
        .map(|&s| {
            let m = fibres
                .iter()
                .filter_map(|(k, f)| {
                    let x = x_grid.node(*k);
                    let (lo, _) = flow_witness(f, c1.eval(x), s).support()?;
                    Some(lo - c2.eval(x))
                })
                .fold(f64::INFINITY, f64::min);
            (s, m)
        })
        .collect();
    let mut sorted = margins.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(HsmiReport {
        all_positive: margins.iter().all(|m| m.1 > 0.0),
        non_decreasing: sorted.windows(2).all(|w| w[1].1 >= w[0].1),
        margins,
    })
}
