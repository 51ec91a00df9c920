mod common;

use common::{adaptive_simpson, dphi, phi, rel_diff};
use nullplane::numerics::*;
use nullplane::Error;
use proptest::prelude::*;

/// ∫_{−1}^{1} exp(−1/(1−x²)) dx; frozen from `adaptive_simpson` at tol 1e−12
/// (see `oracle_reproduces_bump_mass`).
const BUMP_MASS: f64 = 0.443_993_816_168_079_4;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn bump(c: f64, w: f64, a: f64, order: u8) -> SmoothBump {
    SmoothBump::new(c, w, a, order).unwrap()
}

#[test]
fn oracle_reproduces_bump_mass() {
    let v = adaptive_simpson(&phi, -1.0, 1.0, 1e-12);
    assert!((v - BUMP_MASS).abs() < 1e-12, "{v}");
}

#[test]
fn order_one_bump_integrates_to_zero() {
    let f = SmoothFn1D::single(bump(0.3, 0.7, 2.5, 1));
    let (a, b) = f.support().unwrap();
    let v = integrate_1d(|x| f.eval(x), a, b, &spec()).unwrap();
    assert!(v.abs() <= spec().abs_tol, "{v}");
    assert_eq!(f.integral(&spec()).unwrap(), 0.0);
}

#[test]
fn bump_profile_integral_matches_oracle() {
    let v = integrate_1d(phi, -1.0, 1.0, &spec()).unwrap();
    assert!((v - BUMP_MASS).abs() < 1e-13, "{v}");
    let b = SmoothFn1D::single(bump(0.0, 1.0, 1.0, 0));
    assert!((b.integral(&spec()).unwrap() - BUMP_MASS).abs() < 1e-13);
    assert!((bump_profile_transform(0.0) - BUMP_MASS).abs() < 1e-13);
}

#[test]
fn zero_function_integrates_to_zero() {
    assert_eq!(integrate_1d(|_| 0.0, -3.0, 5.0, &spec()).unwrap(), 0.0);
    assert_eq!(SmoothFn1D::zero().integral(&spec()).unwrap(), 0.0);
    assert_eq!(SmoothFn1D::zero().primitive(1.0, &spec()).unwrap(), 0.0);
}

#[test]
fn nonconvergent_integrand_is_reported() {
    let tight = QuadratureSpec { abs_tol: 1e-300, rel_tol: 1e-300, ..spec() };
    let r = integrate_1d(|x| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &tight);
    assert!(matches!(r, Err(Error::NonConvergent { .. })), "{r:?}");
}

#[test]
fn gauss_legendre_is_exact_for_degree_31() {
    let rule = gl16();
    let v: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(30)).sum();
    assert!((v - 2.0 / 31.0).abs() < 1e-15);
    let s: f64 = rule.weights.iter().sum();
    assert!((s - 2.0).abs() < 1e-15);
}

#[test]
fn primitive_examples() {
    let s = spec();
    let d = SmoothFn1D::single(bump(1.0, 0.5, 3.0, 1));
    assert!(d.primitive(2.0, &s).unwrap().abs() < 1e-15);
    assert_eq!(d.primitive(0.0, &s).unwrap(), 0.0);
    let b = SmoothFn1D::single(bump(1.0, 0.5, 3.0, 0));
    let expected = 3.0 * 0.5 * BUMP_MASS;
    assert!((b.primitive(5.0, &s).unwrap() - expected).abs() < 1e-13);
    assert_eq!(b.primitive(0.2, &s).unwrap(), 0.0);
    // interior point against the oracle
    let mid = adaptive_simpson(&|x| 3.0 * phi((x - 1.0) / 0.5), 0.5, 1.2, 1e-12);
    assert!((b.primitive(1.2, &s).unwrap() - mid).abs() < 1e-11);
    // order-1 primitive is the order-0 bump
    assert!((d.primitive(1.2, &s).unwrap() - 3.0 * phi(0.4)).abs() < 1e-15);
}

#[test]
fn order_one_bump_is_the_derivative() {
    let b = bump(0.5, 2.0, 1.5, 1);
    for &x in &[-1.2, 0.1, 0.5, 2.3] {
        let u = (x - 0.5) / 2.0;
        assert!((b.eval(x) - 1.5 * dphi(u) / 2.0).abs() < 1e-15);
    }
}

#[test]
fn profile_transform_matches_oracle() {
    for &q in &[0.5, 5.0, 37.0] {
        let oracle = adaptive_simpson(&|u| (q * u).cos() * phi(u), -1.0, 1.0, 1e-13);
        assert!((bump_profile_transform(q) - oracle).abs() < 1e-12, "q={q}");
        assert!((bump_profile_transform_direct(q) - oracle).abs() < 1e-12, "q={q}");
    }
}

#[test]
fn tabulated_profile_transform_matches_quadrature() {
    let mut r = common::rng(11);
    for _ in 0..400 {
        let q: f64 = rand::Rng::random_range(&mut r, 0.0..999.0);
        let d = bump_profile_transform_direct(q);
        assert!((bump_profile_transform(q) - d).abs() < 1e-15, "q={q}");
        assert_eq!(bump_profile_transform(-q), bump_profile_transform(q));
    }
    assert_eq!(bump_profile_transform(1000.0), 0.0);
}

#[test]
fn bump_fourier_transform_matches_direct_quadrature() {
    let b = bump(0.7, 0.4, 1.3, 1);
    for &p in &[-3.0, 0.2, 11.0] {
        let re = adaptive_simpson(&|x| (p * x).cos() * b.eval(x), 0.3, 1.1, 1e-13);
        let im = adaptive_simpson(&|x| (p * x).sin() * b.eval(x), 0.3, 1.1, 1e-13);
        let f = b.fourier(p);
        assert!((f.re - re).abs() < 1e-11 && (f.im - im).abs() < 1e-11, "p={p} {f} vs {re}+{im}i");
    }
}

fn window(x: f64) -> f64 {
    (-x * x / 8.0).exp()
}

#[test]
fn spectral_diff_constant_is_zero() {
    let grid = ThetaGrid::from_spec(&spec());
    let v = vec![1e-4; grid.points];
    let d = spectral_diff(&v, &grid, &spec()).unwrap();
    assert!(d.iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn spectral_diff_windowed_sine() {
    let grid = ThetaGrid::from_spec(&spec());
    let f = |x: f64| x.sin() * window(x);
    let df = |x: f64| x.cos() * window(x) - x / 4.0 * x.sin() * window(x);
    let v: Vec<f64> = grid.nodes().map(f).collect();
    let d = spectral_diff(&v, &grid, &spec()).unwrap();
    let h = grid.spacing();
    let err = grid.nodes().zip(&d).map(|(x, y)| (df(x) - y).abs()).fold(0.0, f64::max);
    assert!(err < h.powi(4), "err {err}, h⁴ {}", h.powi(4));
}

#[test]
fn spectral_diff_gaussian() {
    let grid = ThetaGrid::from_spec(&spec());
    let v: Vec<f64> = grid.nodes().map(|x| (-x * x).exp()).collect();
    let d = spectral_diff(&v, &grid, &spec()).unwrap();
    for (x, y) in grid.nodes().zip(&d) {
        assert!((y + 2.0 * x * (-x * x).exp()).abs() < 1e-5);
    }
}

#[test]
fn spectral_diff_rejects_undecayed_ends() {
    let grid = ThetaGrid::from_spec(&spec());
    let v = vec![1.0; grid.points];
    assert!(matches!(spectral_diff(&v, &grid, &spec()), Err(Error::BoundaryLeak { .. })));
}

#[test]
fn lagrange_shift_of_gaussian() {
    let grid = ThetaGrid::from_spec(&spec());
    let v: Vec<f64> = grid.nodes().map(|x| (-x * x / 2.0).exp()).collect();
    let s = lagrange_shift(&v, &grid, 0.731);
    for (x, y) in grid.nodes().zip(&s.values) {
        assert!((y - (-(x - 0.731).powi(2) / 2.0).exp()).abs() < 1e-7);
    }
    assert!(s.interp_error < 1e-4);
    assert!(s.leaked < 1e-20);
}

#[test]
fn transverse_grid_integrates_bump() {
    let g = TransverseGrid::gauss_box(&[-1.0], &[1.0], 64);
    assert_eq!(g.len(), 64);
    let v = g.integrate((0..g.len()).map(|i| phi(g.node(i)[0])));
    assert!(rel_diff(v, BUMP_MASS) < 1e-11, "{v}");
    // squares of bumps converge much faster
    let sq = adaptive_simpson(&|x| phi(x).powi(2), -1.0, 1.0, 1e-14);
    let g2 = TransverseGrid::gauss_box(&[-1.0, -1.0], &[1.0, 1.0], 48);
    assert_eq!(g2.len(), 48 * 48);
    let v2 = g2.integrate((0..g2.len()).map(|i| (phi(g2.node(i)[0]) * phi(g2.node(i)[1])).powi(2)));
    assert!(rel_diff(v2, sq * sq) < 1e-10, "{v2}");
}

fn arb_bump(order: u8) -> impl Strategy<Value = SmoothBump> {
    (-3.0..3.0f64, 0.1..2.0f64, -2.0..2.0f64).prop_map(move |(c, w, a)| SmoothBump { center: c, half_width: w, amplitude: a, derivative_order: order })
}

fn arb_fn() -> impl Strategy<Value = SmoothFn1D> {
    prop::collection::vec((-2.0..2.0f64, (0u8..2).prop_flat_map(arb_bump)), 1..4).prop_map(|terms| SmoothFn1D { terms })
}

fn integral_over_r(f: &SmoothFn1D) -> f64 {
    match f.support() {
        None => 0.0,
        Some((a, b)) => {
            let mut pts = f.breakpoints();
            pts.retain(|p| *p >= a && *p <= b);
            integrate_piecewise(|x| f.eval(x), &pts, &spec()).unwrap()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integration_is_linear(f in arb_fn(), g in arb_fn(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let combo = f.scale(a).add(&g.scale(b));
        let lhs = integral_over_r(&combo);
        let rhs = a * integral_over_r(&f) + b * integral_over_r(&g);
        prop_assert!((lhs - rhs).abs() <= 2.0 * spec().abs_tol, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn order_one_bumps_have_zero_mean(b in arb_bump(1)) {
        let (lo, hi) = b.support();
        let v = integrate_1d(|x| b.eval(x), lo, hi, &spec()).unwrap();
        prop_assert!(v.abs() <= spec().abs_tol);
    }

    #[test]
    fn primitive_at_infinity_is_the_integral(f in arb_fn()) {
        let p = f.primitive(f64::INFINITY, &spec()).unwrap();
        prop_assert!((p - integral_over_r(&f)).abs() <= spec().abs_tol);
    }

    #[test]
    fn cubic_differentiated_exactly_inside(c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, c2 in -1.0..1.0f64, c3 in -1.0..1.0f64) {
        let grid = ThetaGrid::new(-2.0, 2.0, 41).unwrap();
        let v: Vec<f64> = grid.nodes().map(|x| c0 + c1 * x + c2 * x * x + c3 * x * x * x).collect();
        let d = finite_difference(&v, grid.spacing());
        let scale = 1.0 + c1.abs() + c2.abs() + c3.abs();
        for (i, x) in grid.nodes().enumerate().skip(2).take(grid.points - 4) {
            let exact = c1 + 2.0 * c2 * x + 3.0 * c3 * x * x;
            prop_assert!((d[i] - exact).abs() <= 1e-10 * scale, "{} vs {}", d[i], exact);
        }
    }
}
