//! Finite-dimensional standard subspaces.
//!
//! Antilinear operators live on the realification ℂⁿ ≅ ℝ²ⁿ, (x + iy) ↦ (x, y).
//! Multiplication by i is the block matrix `[[0, −1], [1, 0]]`, the real part
//! of the inner product is the Euclidean dot product and
//! Im⟨u, v⟩ = uᵀ(−i)v.
//!
//! Conventions: S = JΔ^{1/2} with Δ = S*S, so S* = Δ^{1/2}J is the Tomita
//! operator of the symplectic complement. ⟨·,·⟩ is antilinear in the first
//! slot everywhere except in [`entropy_cutting`], whose formula is stated
//! for the form linear in the first slot; there Im flips sign.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

/// Relative singular-value threshold for rank decisions.
const RANK_TOL: f64 = 1e-8;
/// Eigenvalues with |log λ| below this are treated as λ = 1.
const UNIT_EIGEN_TOL: f64 = 1e-7;
/// Largest admissible component on the λ = 1 eigenspace.
const UNIT_COMPONENT_TOL: f64 = 1e-6;

pub fn realify(v: &DVector<Complex64>) -> DVector<f64> {
    let n = v.len();
    DVector::from_fn(2 * n, |k, _| if k < n { v[k].re } else { v[k - n].im })
}

pub fn complexify(v: &DVector<f64>) -> DVector<Complex64> {
    let n = v.len() / 2;
    DVector::from_fn(n, |k, _| Complex64::new(v[k], v[k + n]))
}

/// Multiplication by i on ℝ²ⁿ.
pub fn imag_unit(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(k + n, k)] = 1.0;
        m[(k, k + n)] = -1.0;
    }
    m
}

/// Im⟨u, v⟩ for realified vectors.
pub fn symplectic(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len() / 2;
    // −i v = (v_im, −v_re)
    let mut acc = 0.0;
    for k in 0..n {
        acc += u[k] * v[k + n] - u[k + n] * v[k];
    }
    acc
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * smax).count()
}

/// Orthonormal basis (columns) of the column span, using the same rank rule.
fn orthonormal_span(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let mut idx: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] > RANK_TOL * smax).collect();
    idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    DMatrix::from_fn(m.nrows(), idx.len(), |r, c| u[(r, idx[c])])
}

fn projector(q: &DMatrix<f64>) -> DMatrix<f64> {
    q * q.transpose()
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Spectral-norm distance of the orthogonal projectors onto two real spans.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    spectral_norm(&(projector(&orthonormal_span(a)) - projector(&orthonormal_span(b))))
}

/// A standard subspace of ℂⁿ with its modular data.
#[derive(Debug, Clone)]
pub struct StandardSubspaceFD {
    pub ambient_dim: usize,
    pub spanning: Vec<DVector<Complex64>>,
    /// Orthonormal real basis of H (2n × n).
    pub basis: DMatrix<f64>,
    /// Realified Tomita operator.
    pub tomita: DMatrix<f64>,
    /// Eigenvalues of Δ, ascending with their orthonormal eigenvectors.
    pub delta_eigenvalues: DVector<f64>,
    pub delta_eigenvectors: DMatrix<f64>,
    /// Realified modular conjugation.
    pub conjugation: DMatrix<f64>,
}

/// P_H = a(Δ) + J b(Δ) as a real 2n × 2n matrix, eigenvalue-1 part excised.
#[derive(Debug, Clone)]
pub struct CuttingProjectionFD {
    pub matrix: DMatrix<f64>,
}

/// Residuals of the modular relations, each relative to the size of the
/// operators involved.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularReport {
    /// ‖JΔJ − Δ⁻¹‖ / ‖Δ⁻¹‖
    pub j_delta_j: f64,
    /// ‖S² − 1‖
    pub involution: f64,
    /// ‖J² − 1‖
    pub j_squared: f64,
    /// ‖S − JΔ^{1/2}‖ / ‖S‖
    pub polar: f64,
    /// d(Δ^{it}H, H) for t ∈ {0.1, 0.5, 1}
    pub flow_invariance: Vec<(f64, f64)>,
    /// d(JH, H′)
    pub j_maps_to_complement: f64,
}

impl ModularReport {
    pub fn max_residual(&self) -> f64 {
        self.flow_invariance
            .iter()
            .map(|(_, d)| *d)
            .chain([self.j_delta_j, self.involution, self.j_squared, self.polar, self.j_maps_to_complement])
            .fold(0.0, f64::max)
    }
}

/// Output of the Trotter product comparison.
#[derive(Debug, Clone)]
pub struct TrotterResult {
    pub product: DMatrix<f64>,
    pub limit: DMatrix<f64>,
    pub error: f64,
}

/// Build H from a spanning set and compute S, Δ, J.
pub fn make_subspace(spanning: &[DVector<Complex64>]) -> Result<StandardSubspaceFD> {
    let Some(first) = spanning.first() else {
        return Err(Error::InvalidInput("empty spanning set".into()));
    };
    let n = first.len();
    if n == 0 || spanning.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidInput("spanning vectors must share a nonzero dimension".into()));
    }
    if spanning.iter().any(|v| v.iter().all(|z| *z == Complex64::new(0.0, 0.0))) {
        return Err(Error::InvalidInput("spanning vectors must be nonzero".into()));
    }
    let k = spanning.len();
    let real = DMatrix::from_fn(2 * n, k, |r, c| realify(&spanning[c])[r]);
    let iu = imag_unit(n);
    let both = {
        let mut m = DMatrix::zeros(2 * n, 2 * k);
        m.view_mut((0, 0), (2 * n, k)).copy_from(&real);
        m.view_mut((0, k), (2 * n, k)).copy_from(&(&iu * &real));
        m
    };
    let r_h = numerical_rank(&real);
    let r_both = numerical_rank(&both);
    if r_both < 2 * n {
        return Err(Error::NotCyclic { deficiency: 2 * n - r_both });
    }
    if 2 * r_h > r_both {
        return Err(Error::NotSeparating { deficiency: 2 * r_h - r_both });
    }
    let basis = orthonormal_span(&real);
    debug_assert_eq!(basis.ncols(), n);
    let mut b = DMatrix::zeros(2 * n, 2 * n);
    b.view_mut((0, 0), (2 * n, n)).copy_from(&basis);
    b.view_mut((0, n), (2 * n, n)).copy_from(&(&iu * &basis));
    let b_inv = b.clone().try_inverse().ok_or(Error::NotSeparating { deficiency: 0 })?;
    let sign = DMatrix::from_fn(2 * n, 2 * n, |r, c| match (r == c, r < n) {
        (true, true) => 1.0,
        (true, false) => -1.0,
        _ => 0.0,
    });
    let tomita = &b * sign * b_inv;
    // polar decomposition from S = UΣVᵀ: J = UVᵀ, Δ = VΣ²Vᵀ
    let svd = tomita.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let delta_eigenvalues = DVector::from_fn(2 * n, |i, _| svd.singular_values[order[i]].powi(2));
    let delta_eigenvectors = DMatrix::from_fn(2 * n, 2 * n, |r, c| v_t[(order[c], r)]);
    if delta_eigenvalues.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::NotSeparating { deficiency: 0 });
    }
    let conjugation = u * v_t;
    Ok(StandardSubspaceFD {
        ambient_dim: n,
        spanning: spanning.to_vec(),
        basis,
        tomita,
        delta_eigenvalues,
        delta_eigenvectors,
        conjugation,
    })
}

fn spectral_matrix(vals: &DVector<f64>, vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&vals.map(f));
    vecs * d * vecs.transpose()
}

/// Returns 0 on the excised λ = 1 eigenspace.
fn excised(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> f64 {
    move |l: f64| if l.ln().abs() < UNIT_EIGEN_TOL { 0.0 } else { f(l) }
}

// a(λ) = 1/(1−λ), b(λ) = λ^{1/2}/(1−λ), written in ℓ = log λ.
fn a_fn(l: f64) -> f64 {
    -1.0 / l.ln().exp_m1()
}
fn b_fn(l: f64) -> f64 {
    -1.0 / (2.0 * (0.5 * l.ln()).sinh())
}
// a(λ)·log λ and b(λ)·log λ, both → −1 at λ = 1.
fn a_log(l: f64) -> f64 {
    let x = l.ln();
    -x / x.exp_m1()
}
fn b_log(l: f64) -> f64 {
    let x = l.ln();
    -x / (2.0 * (0.5 * x).sinh())
}

impl StandardSubspaceFD {
    pub fn delta_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        spectral_matrix(&self.delta_eigenvalues, &self.delta_eigenvectors, f)
    }

    pub fn delta(&self) -> DMatrix<f64> {
        self.delta_fn(|l| l)
    }

    pub fn log_delta(&self) -> DMatrix<f64> {
        self.delta_fn(f64::ln)
    }

    /// Δ^{it} = cos(t logΔ) + i sin(t logΔ) on ℝ²ⁿ.
    pub fn modular_unitary(&self, t: f64) -> DMatrix<f64> {
        let iu = imag_unit(self.ambient_dim);
        self.delta_fn(|l| (t * l.ln()).cos()) + iu * self.delta_fn(|l| (t * l.ln()).sin())
    }

    pub fn cutting_projection(&self) -> CuttingProjectionFD {
        let a = self.delta_fn(excised(a_fn));
        let b = self.delta_fn(excised(b_fn));
        CuttingProjectionFD { matrix: a + &self.conjugation * b }
    }

    /// Norm of the component of `v` in the λ = 1 eigenspace.
    pub fn unit_eigen_component(&self, v: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (k, l) in self.delta_eigenvalues.iter().enumerate() {
            if l.ln().abs() < UNIT_EIGEN_TOL {
                let c = self.delta_eigenvectors.column(k).dot(v);
                acc += c * c;
            }
        }
        acc.sqrt()
    }

    /// Real basis (columns) of H′ = (iH)^⊥.
    pub fn complement_basis(&self) -> DMatrix<f64> {
        let n = self.ambient_dim;
        let ih = imag_unit(n) * &self.basis;
        let eig = SymmetricEigen::new(projector(&ih));
        let idx: Vec<usize> = (0..2 * n).filter(|&k| eig.eigenvalues[k] < 0.5).collect();
        DMatrix::from_fn(2 * n, idx.len(), |r, c| eig.eigenvectors[(r, idx[c])])
    }
}

/// H′ = {ξ : Im⟨ξ, η⟩ = 0 for all η ∈ H}.
pub fn symplectic_complement(h: &StandardSubspaceFD) -> Result<StandardSubspaceFD> {
    let q = h.complement_basis();
    let spanning: Vec<_> = (0..q.ncols()).map(|c| complexify(&q.column(c).into_owned())).collect();
    make_subspace(&spanning)
}

pub fn verify_modular_relations(h: &StandardSubspaceFD) -> Result<ModularReport> {
    let n2 = 2 * h.ambient_dim;
    let id = DMatrix::<f64>::identity(n2, n2);
    let j = &h.conjugation;
    let delta = h.delta();
    let delta_inv = h.delta_fn(|l| 1.0 / l);
    let j_delta_j = spectral_norm(&(j * &delta * j - &delta_inv)) / spectral_norm(&delta_inv);
    let involution = spectral_norm(&(&h.tomita * &h.tomita - &id));
    let j_squared = spectral_norm(&(j * j - &id));
    let polar = spectral_norm(&(&h.tomita - j * h.delta_fn(f64::sqrt))) / spectral_norm(&h.tomita);
    let flow_invariance = [0.1, 0.5, 1.0]
        .iter()
        .map(|&t| (t, subspace_distance(&(h.modular_unitary(t) * &h.basis), &h.basis)))
        .collect();
    let j_maps_to_complement = subspace_distance(&(j * &h.basis), &h.complement_basis());
    Ok(ModularReport { j_delta_j, involution, j_squared, polar, flow_invariance, j_maps_to_complement })
}

/// S_H(ψ) = Im⟨ψ, P_H i logΔ_H ψ⟩ (form linear in the first slot) by
/// spectral calculus. Equals −⟨h, logΔ_H h⟩ ≥ 0 for h ∈ H.
pub fn entropy_cutting(h: &StandardSubspaceFD, psi: &DVector<Complex64>) -> Result<f64> {
    if psi.len() != h.ambient_dim {
        return Err(Error::InvalidInput(format!(
            "vector has dimension {}, subspace lives in {}",
            psi.len(),
            h.ambient_dim
        )));
    }
    let v = realify(psi);
    let component = h.unit_eigen_component(&v);
    if component > UNIT_COMPONENT_TOL {
        return Err(Error::SingularSpectrum { component });
    }
    let iu = imag_unit(h.ambient_dim);
    // P i L ψ = i (aL)(Δ)ψ + J i (bL)(Δ)ψ, with bounded aL, bL.
    let al = h.delta_fn(excised(a_log)) * &v;
    let bl = h.delta_fn(excised(b_log)) * &v;
    let w = &iu * al + &h.conjugation * (&iu * bl);
    Ok(-symplectic(&v, &w))
}

/// (Δ_H^{it/n} Δ_K^{−it/n})ⁿ against e^{it(logΔ_H − logΔ_K)}.
pub fn trotter_translation(h: &StandardSubspaceFD, k: &StandardSubspaceFD, t: f64, n_steps: usize) -> Result<TrotterResult> {
    if h.ambient_dim != k.ambient_dim {
        return Err(Error::InvalidInput("subspaces live in different spaces".into()));
    }
    if n_steps == 0 {
        return Err(Error::InvalidInput("n_steps must be positive".into()));
    }
    let n = h.ambient_dim;
    let step = h.modular_unitary(t / n_steps as f64) * k.modular_unitary(-t / n_steps as f64);
    let mut product = DMatrix::<f64>::identity(2 * n, 2 * n);
    for _ in 0..n_steps {
        product = &step * product;
    }
    let x = h.log_delta() - k.log_delta();
    let x = (&x + x.transpose()) * 0.5;
    let eig = SymmetricEigen::new(x);
    let cos = spectral_matrix(&eig.eigenvalues, &eig.eigenvectors, |l| (t * l).cos());
    let sin = spectral_matrix(&eig.eigenvalues, &eig.eigenvectors, |l| (t * l).sin());
    let limit = cos + imag_unit(n) * sin;
    let error = spectral_norm(&(&product - &limit));
    Ok(TrotterResult { product, limit, error })
}

/// Observed orders log₂(err(n)/err(2n)) along a doubling sequence starting at `n0`.
pub fn trotter_orders(h: &StandardSubspaceFD, k: &StandardSubspaceFD, t: f64, n0: usize, doublings: usize) -> Result<Vec<(usize, f64, f64)>> {
    let mut out = Vec::with_capacity(doublings + 1);
    let mut n = n0;
    let mut prev = trotter_translation(h, k, t, n)?.error;
    out.push((n, prev, f64::NAN));
    for _ in 0..doublings {
        n *= 2;
        let e = trotter_translation(h, k, t, n)?.error;
        out.push((n, e, (prev / e).log2()));
        prev = e;
    }
    Ok(out)
}
