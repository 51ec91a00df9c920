//! Null-plane modular structure of the free scalar field.
//!
//! The crate computes, for thin test functions on a null plane, the fibre
//! decomposition into chiral U(1)-currents, the modular flows of null cuts and
//! the relative entropy of coherent states together with its deformation
//! derivatives (QNEC, ANEC, strong superadditivity).
//!
//! Layout:
//! - [`numerics`]: bumps, Gauss–Legendre quadrature, θ′ grids.
//! - [`stdsubspace`]: finite-dimensional standard subspaces and their modular data.
//! - [`oneparticle`]: mass shell, Fourier restriction, direct-integral vectors.
//! - [`fibre`]: the U(1)-current fibre.
//! - [`nullcut`]: cut profiles, distorted translations/dilations, modular flows.
//! - [`entropy`]: coherent-state relative entropy and its identities.
//! - [`cli`]: scenario files and the batch runner.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod fibre;
pub mod nullcut;
pub mod numerics;
pub mod oneparticle;
pub mod stdsubspace;

pub use error::{Error, Result};
