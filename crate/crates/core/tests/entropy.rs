mod common;

use std::f64::consts::PI;

use common::{adaptive_simpson, dphi, phi, rel_diff};
use nullplane::entropy::*;
use nullplane::nullcut::{CutProfile, ProfileBump};
use nullplane::numerics::{gauss_legendre, QuadratureSpec, SmoothBump, SmoothFn1D, TransverseGrid};
use nullplane::oneparticle::{spatial_restrict, MassShellParams, ThinTestFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn params() -> MassShellParams {
    MassShellParams::new(1.0, 2).unwrap()
}

fn bump(c: f64, w: f64, a: f64, order: u8) -> SmoothBump {
    SmoothBump::new(c, w, a, order).unwrap()
}

fn f1(c: f64, w: f64, a: f64, order: u8) -> SmoothFn1D {
    SmoothFn1D::single(bump(c, w, a, order))
}

fn profile(base: f64, coeff: f64, c: f64, w: f64) -> CutProfile {
    CutProfile::new(base, vec![ProfileBump { coefficient: coeff, factors: vec![bump(c, w, 1.0, 0)] }]).unwrap()
}

fn constant(c: f64) -> CutProfile {
    CutProfile::constant(c)
}

fn state(terms: Vec<(SmoothFn1D, SmoothFn1D)>) -> BMTState {
    BMTState::new(ThinTestFunction::new(terms.into_iter().map(|(u, v)| (u, vec![v])).collect()).unwrap()).unwrap()
}

/// u = φ′ on [−0.5, 1.5], v = φ on [−1, 1].
fn golden_state() -> BMTState {
    state(vec![(f1(0.5, 1.0, 1.0, 1), f1(0.0, 1.0, 1.0, 0))])
}

/// Two non-separable terms, the first with a zero mode.
fn mixed_state() -> BMTState {
    state(vec![
        (f1(1.0, 0.8, 1.0, 0), f1(0.2, 1.0, 1.0, 0)),
        (f1(1.5, 0.6, 0.7, 1), f1(-0.3, 0.7, 1.0, 0)),
    ])
}

/// Zero-mean in x₊ on every fibre.
fn zero_mean_state() -> BMTState {
    state(vec![
        (f1(1.2, 0.7, 1.0, 1), f1(0.0, 1.0, 1.0, 0)),
        (f1(0.6, 0.5, -0.4, 1), f1(0.5, 0.6, 1.0, 0)),
    ])
}

/// Independent evaluation of `mixed_state`.
fn mixed_h(x: f64, y: f64) -> f64 {
    phi((x - 1.0) / 0.8) * phi((y - 0.2) / 1.0) + 0.7 * dphi((x - 1.5) / 0.6) / 0.6 * phi((y + 0.3) / 0.7)
}

const GOLDEN: f64 = 0.1008430118179322505968797115801047444969;

#[test]
fn golden_entropy_for_a_flat_cut() {
    let r = nullcut_entropy(&golden_state(), &constant(0.0), &spec()).unwrap();
    assert!(rel_diff(r.s, GOLDEN) < 1e-12, "{}", r.s);
    assert_eq!(r.per_fibre.len(), 64);
    assert!((r.s - GOLDEN).abs() <= r.quadrature_error && r.quadrature_error < 2.0 * spec().rel_tol * r.s);
    assert!(r.flagged.iter().any(|k| k == "unsigned_dS_equals_E"));
}

#[test]
fn entropy_matches_two_dimensional_oracle() {
    let c = profile(0.3, 0.5, 0.1, 0.9);
    let cut = |y: f64| 0.3 + 0.5 * phi((y - 0.1) / 0.9);
    let oracle = adaptive_simpson(
        &|y| {
            let c = cut(y);
            adaptive_simpson(&|x| (x - c) * mixed_h(x, y).powi(2), c, c.max(2.1), 1e-13)
        },
        -1.0,
        1.2,
        1e-12,
    );
    let s = nullcut_entropy(&mixed_state(), &c, &spec()).unwrap().s;
    assert!(rel_diff(s, PI * oracle) < 1e-10, "{s} vs {}", PI * oracle);
}

#[test]
fn trivial_entropies() {
    let s = spec();
    let zero = BMTState::new(ThinTestFunction::default()).unwrap();
    let r = nullcut_entropy(&zero, &constant(0.0), &s).unwrap();
    assert_eq!((r.s, r.s_prime, r.s_double_prime), (0.0, 0.0, 0.0));
    assert_eq!(nullcut_entropy(&mixed_state(), &constant(2.5), &s).unwrap().s, 0.0);
}

#[test]
fn transverse_sum_matches_tensor_quadrature() {
    // (x⊥, y) ↦ (x⊥, C + y) maps the region above the cut onto a box
    let c = profile(-0.2, 0.6, 0.0, 0.7);
    let st = mixed_state();
    let s = nullcut_entropy(&st, &c, &spec()).unwrap().s;
    let rule = gauss_legendre(16);
    let (ys, wy) = rule.composite_nodes(0.0, 3.0, 96);
    let (xs, wx) = rule.composite_nodes(-1.0, 1.2, 24);
    let mut acc = 0.0;
    for (x, a) in xs.iter().zip(&wx) {
        let cut = c.eval(&[*x]);
        for (y, b) in ys.iter().zip(&wy) {
            acc += a * b * y * st.h.eval(cut + y, &[*x]).powi(2);
        }
    }
    assert!(rel_diff(s, PI * acc) < spec().rel_tol, "{s} vs {}", PI * acc);
}

#[test]
fn primitive_of_the_state() {
    let st = mixed_state();
    let s = spec();
    let y = 0.4;
    for x in [0.0f64, 0.9, 1.6, 3.0] {
        let oracle = adaptive_simpson(&|t| mixed_h(t, y), 0.0, x, 1e-13);
        assert!((st.primitive(x, &[y], &s).unwrap() - oracle).abs() < 1e-11);
    }
}

#[test]
fn compensation_removes_the_zero_mode_below_the_floor() {
    let s = spec();
    let st = mixed_state();
    let (h, changed) = st.compensated(0.1, &s).unwrap();
    assert!(changed);
    assert!(h.zero_mode_flag() || h.terms.iter().all(|(u, _)| u.integral(&s).unwrap().abs() < 1e-14));
    for y in [-0.5, 0.0, 0.7] {
        assert!(h.fibre_function(&[y]).integral(&s).unwrap().abs() < 1e-13);
        for x in [0.1, 0.5, 1.3] {
            assert_eq!(h.eval(x, &[y]), st.h.eval(x, &[y]));
        }
    }
    let (_, untouched) = zero_mean_state().compensated(0.0, &s).unwrap();
    assert!(!untouched);
}

fn fd_check(st: &BMTState, c: &CutProfile, a: &CutProfile, t: f64) -> (f64, f64, f64, f64) {
    let s = spec();
    let at = |t: f64| nullcut_entropy(st, &c.deform(t, a), &s).unwrap().s;
    let h = 1e-3;
    let (sm, s0, sp) = (at(t - h), at(t), at(t + h));
    let (d1, d2) = entropy_derivatives(st, c, a, t, &s).unwrap();
    ((sp - sm) / (2.0 * h), d1, (sp - 2.0 * s0 + sm) / (h * h), d2)
}

#[test]
fn derivatives_match_central_differences() {
    let (fd1, d1, fd2, d2) = fd_check(&golden_state(), &constant(0.0), &constant(1.0), 0.0);
    assert!(rel_diff(fd1, d1) < 1e-4, "{fd1} {d1}");
    assert!(rel_diff(fd2, d2) < 1e-4, "{fd2} {d2}");
}

#[test]
fn derivatives_match_richardson_differences_for_bump_deformations() {
    let s = spec();
    let st = mixed_state();
    let (c, a) = (profile(0.2, 0.4, -0.2, 0.8), profile(0.5, 1.0, 0.3, 0.6));
    for t in [0.3, 0.9, 1.5] {
        let at = |t: f64| nullcut_entropy(&st, &c.deform(t, &a), &s).unwrap().s;
        let d2 = |h: f64| (at(t + h) - 2.0 * at(t) + at(t - h)) / (h * h);
        let d1 = |h: f64| (at(t + h) - at(t - h)) / (2.0 * h);
        let (r1, r2) = ((4.0 * d1(5e-4) - d1(1e-3)) / 3.0, (4.0 * d2(5e-4) - d2(1e-3)) / 3.0);
        let (e1, e2) = entropy_derivatives(&st, &c, &a, t, &s).unwrap();
        assert!(rel_diff(r1, e1) < 1e-4, "t={t}: {r1} {e1}");
        assert!(rel_diff(r2, e2) < 1e-4, "t={t}: {r2} {e2}");
    }
}

#[test]
fn derivative_examples() {
    let s = spec();
    let st = mixed_state();
    assert_eq!(entropy_derivatives(&st, &constant(0.0), &constant(0.0), 0.3, &s).unwrap(), (0.0, 0.0));
    assert_eq!(entropy_derivatives(&st, &constant(2.0), &constant(1.0), 0.5, &s).unwrap(), (0.0, 0.0));
    assert!(entropy_derivatives(&st, &constant(0.0), &profile(0.0, -1.0, 0.0, 1.0), 0.0, &s).is_err());
}

#[test]
fn energy_examples_and_slope() {
    let s = spec();
    let st = golden_state();
    // ∫φ′² · ∫φ² for unit widths
    let full = 0.40958706075277012817 * 0.13308612084499427156;
    let e = energy_null_cut(&st, &constant(1.0), &constant(-1.0), &s).unwrap();
    assert!(rel_diff(e, full) < 1e-12, "{e}");
    let zero = BMTState::new(ThinTestFunction::default()).unwrap();
    assert_eq!(energy_null_cut(&zero, &constant(1.0), &constant(0.0), &s).unwrap(), 0.0);
    let (c, a) = (profile(0.2, 0.4, -0.2, 0.8), profile(0.5, 1.0, 0.3, 0.6));
    let m = mixed_state();
    let e = energy_null_cut(&m, &a, &c, &s).unwrap();
    let (d1, _) = entropy_derivatives(&m, &c, &a, 0.0, &s).unwrap();
    assert!((e + d1 / PI).abs() <= 1e-8 * e.abs(), "{e} {d1}");
}

#[test]
fn qnec_examples() {
    let s = spec();
    let st = mixed_state();
    let ts: Vec<f64> = (0..11).map(|i| -1.0 + 0.3 * i as f64).collect();
    let flat = qnec_sweep(&st, &constant(0.0), &constant(0.0), &ts, &s).unwrap();
    assert!(flat.holds && flat.points.iter().all(|p| p.saturated && p.s_double_prime == 0.0));

    // A supported on a strip: S″ > 0 exactly where h(C + tA) ≠ 0 on {A > 0}
    let a = profile(0.0, 1.0, 0.3, 0.5);
    let sweep = qnec_sweep(&st, &constant(0.0), &a, &ts, &s).unwrap();
    assert!(sweep.holds);
    let grid = TransverseGrid::gauss_box(&[-1.0], &[1.2], 64);
    for p in &sweep.points {
        let touches = (0..grid.len()).any(|k| {
            let y = grid.node(k)[0];
            let av = a.eval(&[y]);
            av > 0.0 && mixed_h(p.t * av, y) != 0.0
        });
        assert_eq!(p.s_double_prime > 0.0, touches, "t = {}", p.t);
        assert_eq!(p.qnec_margin, p.s_double_prime - QNEC_FLOOR);
    }
    assert_eq!(sweep.points.len(), ts.len());
}

#[test]
fn weyl_overlap_examples() {
    let s = spec();
    let grid = TransverseGrid::gauss_box(&[-1.0], &[1.0], 32);
    let h1 = ThinTestFunction::separable(f1(1.0, 0.5, 1.0, 1), vec![f1(0.0, 1.0, 1.0, 0)]);
    let h2 = ThinTestFunction::separable(f1(1.4, 0.7, -0.6, 1), vec![f1(0.2, 0.8, 1.0, 0)]);
    let xi = spatial_restrict(&h1, &params(), &grid, &s).unwrap();
    let eta = spatial_restrict(&h2, &params(), &grid, &s).unwrap();
    assert!((weyl_overlap(&xi, &xi).unwrap() - 1.0).norm() < 1e-14);
    let zero = xi.lincomb(Complex64::new(0.0, 0.0), &xi, Complex64::new(0.0, 0.0)).unwrap();
    let vac = weyl_overlap(&xi, &zero).unwrap();
    assert!((vac - (-0.5 * xi.norm_sqr()).exp()).norm() < 1e-14);
    let w = weyl_overlap(&xi, &eta).unwrap();
    assert!(w.norm() <= 1.0 + 1e-12);

    // direct formula with inner products on a refined θ′ grid
    let fine = QuadratureSpec { theta_points: 8192, ..s };
    let xf = spatial_restrict(&h1, &params(), &grid, &fine).unwrap();
    let ef = spatial_restrict(&h2, &params(), &grid, &fine).unwrap();
    let direct = (xf.inner(&ef).unwrap() - 0.5 * (xf.norm_sqr() + ef.norm_sqr())).exp();
    assert!((w - direct).norm() < 1e-10, "{w} {direct}");
}

#[test]
fn anec_examples() {
    let s = spec();
    let zero = BMTState::new(ThinTestFunction::default()).unwrap();
    let r = anec_identity(&zero, &constant(0.0), &constant(1.0), &params(), &s).unwrap();
    assert_eq!((r.route_a, r.route_b, r.route_c), (0.0, 0.0, 0.0));

    // A lives at x⊥ ≥ 1.3, h at |x⊥| ≤ 1
    let far = CutProfile::nonneg(0.0, vec![ProfileBump { coefficient: 1.0, factors: vec![bump(2.5, 1.2, 1.0, 0)] }], &TransverseGrid::gauss_box(&[-1.0], &[1.0], 64)).unwrap();
    let r = anec_identity(&golden_state(), &constant(0.0), &far, &params(), &s).unwrap();
    assert_eq!((r.route_a, r.route_b), (0.0, 0.0));
    assert!(r.route_c.abs() < 1e-12, "{}", r.route_c);
}

#[test]
fn anec_routes_agree() {
    let s = spec();
    for (c, a) in [(constant(0.0), constant(1.0)), (profile(0.1, 0.4, 0.0, 0.9), profile(0.3, 1.0, 0.2, 0.7))] {
        let r = anec_identity(&zero_mean_state(), &c, &a, &params(), &s).unwrap();
        assert!(!r.compensated);
        assert!(r.rel_ab <= 1e-6, "{r:?}");
        assert!(r.rel_cb <= 1e-4, "{r:?}");
        assert!(r.route_c_imag.abs() <= 1e-6 * r.route_b);
    }
    // with a zero mode every route sees the compensated function
    let r = anec_identity(&mixed_state(), &constant(0.0), &constant(1.0), &params(), &s).unwrap();
    assert!(r.compensated && r.rel_ab <= 1e-6 && r.rel_cb <= 1e-4, "{r:?}");
}

#[test]
fn superadditivity_examples() {
    let s = spec();
    let st = mixed_state();
    let c = profile(0.1, 0.5, 0.0, 1.0);
    assert_eq!(superadditivity_check(&st, &c, &c, &s).unwrap().residual, 0.0);
    let r = superadditivity_check(&st, &constant(0.0), &constant(1.0), &s).unwrap();
    assert_eq!(r.s_union, r.s1);
    assert_eq!(r.s_intersection, r.s2);
    assert!(r.residual.abs() <= 1e-15 * r.s1);
    let r = superadditivity_check(&st, &profile(0.0, 1.2, -0.3, 0.6), &profile(0.3, 0.6, 0.4, 0.5), &s).unwrap();
    assert!(r.s_union > r.s1.max(r.s2) && r.s_intersection < r.s1.min(r.s2));
    assert!(r.relative <= 1e-8, "{r:?}");
}

fn arb_state() -> impl Strategy<Value = BMTState> {
    (0.0..2.0f64, 0.3..1.2f64, -1.0..1.0f64, prop::bool::ANY, -0.5..0.5f64, 0.4..1.0f64).prop_map(|(c, w, a, order, y, v)| {
        state(vec![(f1(c, w, 1.0, order as u8), f1(y, v, 1.0, 0)), (f1(c + 0.3, 0.5, a, 1), f1(0.0, 1.0, 1.0, 0))])
    })
}

fn arb_profile() -> impl Strategy<Value = CutProfile> {
    (-1.0..1.5f64, -1.0..1.0f64, -0.5..0.5f64, 0.3..1.2f64).prop_map(|(b, k, c, w)| profile(b, k, c, w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn entropy_is_nonnegative(st in arb_state(), c in arb_profile()) {
        prop_assert!(nullcut_entropy(&st, &c, &spec()).unwrap().s >= -1e-12);
    }

    #[test]
    fn entropy_decreases_as_the_cut_rises(st in arb_state(), c in arb_profile(), k in 0.0..1.0f64, c0 in -0.5..0.5f64, w in 0.3..1.0f64) {
        let higher = CutProfile::new(c.base, c.bumps.iter().cloned().chain([ProfileBump { coefficient: k, factors: vec![bump(c0, w, 1.0, 0)] }]).collect()).unwrap();
        let s1 = nullcut_entropy(&st, &c, &spec()).unwrap().s;
        let s2 = nullcut_entropy(&st, &higher, &spec()).unwrap().s;
        prop_assert!(s2 <= s1 + 1e-10, "{} {}", s1, s2);
    }

    #[test]
    fn entropy_is_translation_covariant(st in arb_state(), c in arb_profile(), a in -2.0..2.0f64) {
        let moved = BMTState::new(ThinTestFunction { terms: st.h.terms.iter().map(|(u, v)| (u.translate(a), v.clone())).collect() }).unwrap();
        let shifted = CutProfile { base: c.base + a, ..c.clone() };
        let s1 = nullcut_entropy(&st, &c, &spec()).unwrap().s;
        let s2 = nullcut_entropy(&moved, &shifted, &spec()).unwrap().s;
        prop_assert!((s1 - s2).abs() <= 1e-10, "{} {}", s1, s2);
    }

    #[test]
    fn qnec_holds(st in arb_state(), c in arb_profile(), k in 0.0..2.0f64) {
        let a = CutProfile { base: 0.0, bumps: vec![ProfileBump { coefficient: k, factors: vec![bump(0.0, 1.0, 1.0, 0)] }], nonneg_flag: true };
        let ts: Vec<f64> = (0..7).map(|i| -1.5 + 0.5 * i as f64).collect();
        let sweep = qnec_sweep(&st, &c, &a, &ts, &spec()).unwrap();
        prop_assert!(sweep.holds && sweep.min_s_double_prime >= QNEC_FLOOR);
    }

    #[test]
    fn superadditivity_is_saturated(st in arb_state(), c1 in arb_profile(), c2 in arb_profile()) {
        let r = superadditivity_check(&st, &c1, &c2, &spec()).unwrap();
        prop_assert!(r.relative <= 1e-8, "{:?}", r);
    }
}

