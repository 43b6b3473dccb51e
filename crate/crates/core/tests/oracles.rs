//! Brute-force references that share no code with the library's quadrature.

use std::f64::consts::FRAC_PI_2;

use coniso_core::cone::{cap_quadrature, ConvexCone};
use coniso_core::domain::StarDomain;
use coniso_core::measure::{ball_closed_form, ball_reference, perimeter_inside_cone, volume};
use coniso_core::weight::HomogeneousWeight;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

const SEGMENTS: usize = 1_000_000;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Polyline through `R(θ)ω(θ)`: weighted length (midpoint rule per segment)
/// and the enclosed area of the fan from the origin.
fn polyline(r: impl Fn(f64) -> f64, w: impl Fn(f64, f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let point = |t: f64| [r(t) * t.cos(), r(t) * t.sin()];
    let mut prev = point(lo);
    let (mut length, mut area) = (0.0, 0.0);
    for i in 1..=SEGMENTS {
        let next = point(lo + (hi - lo) * i as f64 / SEGMENTS as f64);
        let mid = [0.5 * (prev[0] + next[0]), 0.5 * (prev[1] + next[1])];
        length += w(mid[0], mid[1]) * (next[0] - prev[0]).hypot(next[1] - prev[1]);
        area += 0.5 * (prev[0] * next[1] - prev[1] * next[0]);
        prev = next;
    }
    (length, area)
}

#[test]
fn smooth_profile_matches_polyline_perimeter_and_area() {
    let cone = ConvexCone::<f64>::sector(FRAC_PI_2).unwrap();
    let grid = cap_quadrature(&cone, 256).unwrap();
    let dom = StarDomain::ball(&cone, &grid, 1.0).unwrap().perturb(2, 0.2).unwrap();
    let w = HomogeneousWeight::constant(2);
    let (length, area) = polyline(|t| 1.0 + 0.2 * (4.0 * t).cos(), |_, _| 1.0, 0.0, FRAC_PI_2);
    let p = perimeter_inside_cone(&dom, &w).unwrap();
    let m = volume(&dom, &w).unwrap();
    assert!(rel(p, length) < 1e-5, "{p} vs {length}");
    assert!(rel(m, area) < 1e-5, "{m} vs {area}");
}

#[test]
fn weighted_perimeter_matches_polyline() {
    let cone = ConvexCone::<f64>::orthant(2, &[0, 1]).unwrap();
    let grid = cap_quadrature(&cone, 256).unwrap();
    let dom = StarDomain::ball(&cone, &grid, 1.0).unwrap().perturb(3, -0.15).unwrap();
    let w = HomogeneousWeight::monomial(vec![1.0, 1.0]).unwrap();
    let (length, _) = polyline(|t| 1.0 - 0.15 * (6.0 * t).cos(), |x, y| x * y, 0.0, FRAC_PI_2);
    let p = perimeter_inside_cone(&dom, &w).unwrap();
    assert!(rel(p, length) < 1e-5, "{p} vs {length}");
}

/// `∫_0^∞ x^a e^{-x²} dx` by composite Simpson after `x = t²`; the
/// integrand is smooth in `t` whenever `2a` is an integer.
fn gaussian_moment(a: f64) -> f64 {
    let n = 200_000;
    let hi = 12.0f64.sqrt();
    let f = |t: f64| {
        let x = t * t;
        2.0 * t * x.powf(a) * (-x * x).exp()
    };
    let h = hi / n as f64;
    let mut s = f(0.0) + f(hi);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn gaussian_integral_oracle() {
    // ∫_Σ w e^{-|x|²} = P(Σ∩B₁) Γ(D/2) / 2 in polar coordinates.
    let cases: [(&[f64], usize); 3] = [(&[1.0, 1.0], 2), (&[0.5, 2.0], 2), (&[1.0, 0.0, 0.5], 3)];
    for (a, n) in cases {
        let cone = ConvexCone::<f64>::orthant(n, &(0..n).collect::<Vec<_>>()).unwrap();
        let w = HomogeneousWeight::monomial(a.to_vec()).unwrap();
        let d = w.effective_dimension();
        let cartesian: f64 = a.iter().map(|&ai| gaussian_moment(ai)).product();
        let expected = 2.0 * cartesian / gamma(d / 2.0);
        let grid = cap_quadrature(&cone, 256).unwrap();
        let got = ball_reference(&cone, &grid, &w).unwrap().perimeter;
        assert!(rel(got, expected) < 1e-9, "A = {a:?}: {got} vs {expected}");
    }
}

#[test]
fn quadrant_xy_worked_case() {
    let cone = ConvexCone::<f64>::orthant(2, &[0, 1]).unwrap();
    let w = HomogeneousWeight::monomial(vec![1.0, 1.0]).unwrap();
    let grid = cap_quadrature(&cone, 256).unwrap();
    let ball = ball_reference(&cone, &grid, &w).unwrap();
    assert!((ball.perimeter - 0.5).abs() < 1e-12);
    assert!((ball.volume - 0.125).abs() < 1e-12);
    assert!(rel(ball.quotient, 2f64.powf(1.25)) < 1e-12);
}

#[test]
fn half_plane_y_weight() {
    // P = ∫_0^π sin θ dθ = 2.
    let cone = ConvexCone::<f64>::halfspace(2, 1).unwrap();
    let w = HomogeneousWeight::monomial(vec![0.0, 1.0]).unwrap();
    let grid = cap_quadrature(&cone, 256).unwrap();
    let ball = ball_reference(&cone, &grid, &w).unwrap();
    assert!((ball.perimeter - 2.0).abs() < 1e-10);
}

#[test]
fn gamma_formula_for_random_monomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..10 {
        let n = 2 + case % 2;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let cone = ConvexCone::<f64>::orthant(n, &(0..n).collect::<Vec<_>>()).unwrap();
        let w = HomogeneousWeight::monomial(a.clone()).unwrap();
        let d = n as f64 + a.iter().sum::<f64>();
        let c = a.iter().map(|&ai| gamma((ai + 1.0) / 2.0)).product::<f64>()
            / (2f64.powi(n as i32 - 1) * gamma(d / 2.0));
        let grid = cap_quadrature(&cone, 256).unwrap();
        let got = ball_reference(&cone, &grid, &w).unwrap();
        assert!(rel(got.perimeter, c) < 1e-9, "A = {a:?}");
        assert!(rel(got.volume, c / d) < 1e-9, "A = {a:?}");
        let closed = ball_closed_form(&cone, &w).unwrap();
        assert!(rel(closed.perimeter, c) < 1e-12, "A = {a:?}");
    }
}
