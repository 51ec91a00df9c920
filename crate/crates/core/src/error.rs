use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge: last two estimates {prev:e} and {last:e}")]
    NonConvergent { prev: f64, last: f64 },
    #[error("support leaks out of the θ′ window (lost mass {leaked:e})")]
    BoundaryLeak { leaked: f64 },
    #[error("spanning set is not cyclic: real rank deficiency {deficiency}")]
    NotCyclic { deficiency: usize },
    #[error("spanning set is not separating: H ∩ iH has real dimension {deficiency}")]
    NotSeparating { deficiency: usize },
    #[error("vector has component {component:e} on the eigenvalue-1 subspace of Δ")]
    SingularSpectrum { component: f64 },
    #[error("ω is undefined at m = 0, p⊥ = 0")]
    ZeroMassZeroMomentum,
    #[error("test function has a lightlike zero mode in terms {terms:?}")]
    ZeroModePresent { terms: Vec<usize> },
    #[error("cut profiles are not ordered: C1 - C2 = {gap:e} at x⊥ = {at:?}")]
    ProfileOrderViolation { at: Vec<f64>, gap: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
