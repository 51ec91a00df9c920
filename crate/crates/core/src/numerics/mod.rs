//! Deterministic numerical kernel shared by every other module.

mod bump;
mod grid;
mod quadrature;

pub use bump::{bump_profile_transform, bump_profile_transform_direct, PROFILE_Q_MAX, profile_transform_table, SmoothBump, SmoothFn1D};
pub use grid::{
    checked_shift, finite_difference, lagrange_shift, spectral_diff, tail_mass, Sample, Shifted, ThetaGrid,
    TransverseGrid,
};
pub use quadrature::{
    compensated_sum, gauss_legendre, gl16, integrate_1d, integrate_1d_est, integrate_piecewise,
    CompensatedSum, GaussLegendre, Integral, QuadratureSpec,
};
