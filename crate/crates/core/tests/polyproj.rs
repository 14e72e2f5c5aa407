use hsm_core::exponents::ExtendedExponent;
use hsm_core::fields::{parse_field, radial_symmetrize_with, PolarGrid, ScalarField};
use hsm_core::jet::{multi_indices, MultiIndex};
use hsm_core::polyproj::*;
use hsm_core::Error;

fn mi(a: &[u32]) -> MultiIndex {
    MultiIndex(a.to_vec())
}

fn field(spec: &str, n: usize) -> ScalarField {
    parse_field(spec, n).unwrap()
}

fn int(n: i64) -> ExtendedExponent {
    ExtendedExponent::integer(n)
}

fn max_coeff_diff(a: &MultiIndexPolynomial, b: &MultiIndexPolynomial) -> f64 {
    (0..a.k)
        .flat_map(|d| multi_indices(a.dim, d))
        .map(|alpha| (a.coeff(&alpha) - b.coeff(&alpha)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn ball_average_examples() {
    let grid = PolarGrid::default_for(3);
    let c = ScalarField::constant(3, -4.25);
    let v = ball_average_coeff(&c, &mi(&[0, 0, 0]), &[0.0; 3], 1.0, &grid.sphere, 24).unwrap();
    assert!((v + 4.25).abs() < 1e-13);

    let x1sq = field("coord_poly([2,0,0])", 3);
    let v = ball_average_coeff(&x1sq, &mi(&[1, 0, 0]), &[0.0; 3], 1.0, &grid.sphere, 24).unwrap();
    assert!(v.abs() < 1e-13);
    for (center, radius) in [([0.0; 3], 1.0), ([1.0, -2.0, 0.5], 0.3)] {
        let v = ball_average_coeff(&x1sq, &mi(&[2, 0, 0]), &center, radius, &grid.sphere, 24).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
    // mean of x₁² over the unit ball in R³ is 1/5
    let v = ball_average_coeff(&x1sq, &mi(&[0, 0, 0]), &[0.0; 3], 1.0, &grid.sphere, 24).unwrap();
    assert!((v - 0.2).abs() < 1e-12, "{v}");
}

#[test]
fn limit_coefficient_examples() {
    let grid = PolarGrid::default_for(3);
    let u = field("5 + power(-2)", 3);
    let fit = limit_coeff(&u, &mi(&[0, 0, 0]), &grid.sphere, 8.0, -1.0).unwrap();
    assert!((fit.value - 5.0).abs() < 1e-6, "{fit:?}");

    let bump = field("bump(2) + shifted_bump([0.5,-0.3,0.2], 1)", 3);
    for alpha in [mi(&[0, 0, 0]), mi(&[1, 0, 0]), mi(&[0, 1, 1])] {
        let fit = limit_coeff(&bump, &alpha, &grid.sphere, 8.0, -1.5).unwrap();
        assert_eq!(fit.value, 0.0);
    }

    let lin = field("3*coord_poly([1,0,0]) + gaussian(1)", 3);
    let fit = limit_coeff(&lin, &mi(&[1, 0, 0]), &grid.sphere, 8.0, -1.0).unwrap();
    assert!((fit.value - 3.0).abs() < 1e-9, "{fit:?}");
}

#[test]
fn richardson_ladder_shape() {
    assert_eq!(richardson_ladder(-1.0), [-1.0, -2.0, -3.0, -4.0, -5.0]);
    assert_eq!(richardson_ladder(-0.5), [-0.5, -1.0, -1.5, -2.0, -2.5]);
}

#[test]
fn taylor_coefficient_examples() {
    let x1sq = field("coord_poly([2,0])", 2);
    assert!((taylor_coeff(&x1sq, &mi(&[2, 0]), &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
    let g = field("gaussian(1)", 3);
    assert!(taylor_coeff(&g, &mi(&[1, 0, 0]), &[0.0; 3]).unwrap().abs() < 1e-14);
    // (1+|x|²)^{1/2}
    let h = field("aubin_talenti(1)", 3);
    assert!((taylor_coeff(&h, &mi(&[0, 0, 0]), &[0.0; 3]).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn constant_recovered_below_minus_one() {
    let grid = PolarGrid::default_for(3);
    for c in [-2.0, 0.0, 0.75, 5.0] {
        let u = field(&format!("{c} + power(-2)"), 3);
        let pi = construct_pi(&u, 1, -2.0, int(2), &PiStrategy::Auto, &grid).unwrap();
        assert!((pi.coeff(&mi(&[0, 0, 0])) - c).abs() < 1e-6, "c = {c}: {pi:?}");
        assert_eq!(pi.provenance(&mi(&[0, 0, 0])), Some(&Provenance::LimitAtInfinity));
    }
}

#[test]
fn affine_part_recovered_below_minus_k() {
    let grid = PolarGrid::default_for(3);
    let u = field("1.5 - 0.75*coord_poly([1,0,0]) + gaussian(1)", 3);
    let pi = construct_pi(&u, 2, -3.0 + 0.5, int(2), &PiStrategy::Auto, &grid).unwrap();
    assert!((pi.coeff(&mi(&[0, 0, 0])) - 1.5).abs() < 1e-5, "{pi:?}");
    assert!((pi.coeff(&mi(&[1, 0, 0])) + 0.75).abs() < 1e-5);
    assert!(pi.coeff(&mi(&[0, 1, 0])).abs() < 1e-5);
    assert!(pi.coeff(&mi(&[0, 0, 1])).abs() < 1e-5);
}

#[test]
fn taylor_strategy_uses_the_value_at_the_point() {
    let grid = PolarGrid::default_for(3);
    let u = field("gaussian(1)", 3);
    let strat = PiStrategy::Taylor { point: vec![0.0; 3] };
    let pi = construct_pi(&u, 1, 0.0, int(4), &strat, &grid).unwrap();
    assert!((pi.coeff(&mi(&[0, 0, 0])) - 1.0).abs() < 1e-14);
    let err = construct_pi(&u, 1, 0.0, int(3), &strat, &grid).unwrap_err();
    assert!(matches!(err, Error::TaylorInadmissible { .. }));
}

#[test]
fn excluded_and_one_dimensional_cases_are_rejected() {
    let g3 = PolarGrid::default_for(3);
    let u = field("gaussian(1)", 3);
    assert!(matches!(construct_pi(&u, 2, -2.0, int(2), &PiStrategy::Auto, &g3), Err(Error::ExcludedS { .. })));
    let g1 = PolarGrid::default_for(1);
    let v = field("gaussian(1)", 1);
    assert!(matches!(construct_pi(&v, 1, -1.5, int(2), &PiStrategy::Auto, &g1), Err(Error::DimensionOne(_))));
}

#[test]
fn poly_membership_examples() {
    let mut one = MultiIndexPolynomial::zero(3, 1);
    one.set(mi(&[0, 0, 0]), 1.0, Provenance::Zero);
    assert!(poly_membership(&one, -0.5, 1, int(2)));

    let mut x1 = MultiIndexPolynomial::zero(3, 3);
    x1.set(mi(&[1, 0, 0]), 1.0, Provenance::Zero);
    assert!(!poly_membership(&x1, -2.5, 3, int(2)));

    let zero = MultiIndexPolynomial::zero(2, 2);
    for (s, k) in [(-3.5, 2), (0.5, 2), (-1.5, 2)] {
        assert!(poly_membership(&zero, s, k, ExtendedExponent::Infinite));
    }
}

#[test]
fn unique_below_minus_k_across_p_and_r0() {
    let grid = PolarGrid::default_for(3);
    let u = field("2 + 0.5*coord_poly([0,1,0]) + gaussian(0.5) + bump(3)", 3);
    let base = construct_pi(&u, 2, -2.5, int(1), &PiStrategy::Auto, &grid).unwrap();
    for p in [2, 4] {
        let other = construct_pi(&u, 2, -2.5, int(p), &PiStrategy::Auto, &grid).unwrap();
        assert!(max_coeff_diff(&base, &other) < 1e-6);
    }
    let opts = PiOptions { r0: 16.0, ..PiOptions::default() };
    let doubled = construct_pi_with(&u, 2, -2.5, int(2), &PiStrategy::Auto, &grid, &opts).unwrap();
    assert!(max_coeff_diff(&base, &doubled) < 1e-6);
}

#[test]
fn stable_within_a_regime_component() {
    let grid = PolarGrid::default_for(3);
    let u = field("1 + coord_poly([1,0,0]) * bump(2) + 0.25*coord_poly([0,0,1]) + gaussian(1)", 3);
    let pairs = [(-1.25, -1.75), (-2.25, -3.5), (0.5, 2.0)];
    for (s1, s2) in pairs {
        let a = construct_pi(&u, 2, s1, int(2), &PiStrategy::Auto, &grid).unwrap();
        let b = construct_pi(&u, 2, s2, int(2), &PiStrategy::Auto, &grid).unwrap();
        assert!(max_coeff_diff(&a, &b) < 1e-9, "s = {s1}, {s2}");
    }
}

#[test]
fn compact_support_gives_zero() {
    let grid = PolarGrid::default_for(3);
    let u = field("bump(2) + shifted_bump([0.5,-0.3,0.2], 1)", 3);
    for k in 1..=3 {
        let pi = construct_pi(&u, k, -(k as f64) - 0.5, int(2), &PiStrategy::Auto, &grid).unwrap();
        assert!(pi.max_abs_coeff() < 1e-8, "k = {k}");
        assert_eq!(pi.degree_with_tol(POLY_ZERO_TOL), None);
    }
}

#[test]
fn symmetrized_field_has_the_same_constant() {
    let grid = PolarGrid::default_for(3);
    let u = field("-1.5 + coord_poly([1,0,0]) * bump(2) + 0.5*gaussian(1)", 3);
    let us = radial_symmetrize_with(&u, &grid.sphere);
    for s in [-2.0, -1.5, 0.5] {
        let a = construct_pi(&u, 1, s, int(2), &PiStrategy::Auto, &grid).unwrap();
        let b = construct_pi(&us, 1, s, int(2), &PiStrategy::Auto, &grid).unwrap();
        assert!(max_coeff_diff(&a, &b) < 1e-6, "s = {s}");
    }
}

#[test]
fn construction_is_linear() {
    let grid = PolarGrid::default_for(2);
    let u = field("3 + coord_poly([1,0]) + gaussian(1)", 2);
    let v = field("-1 + 2*coord_poly([0,1]) + bump(1.5)", 2);
    let w = ScalarField::linear_combination(&[(1.0, u.clone()), (1.0, v.clone())]);
    for s in [-2.5, -1.5, 0.5] {
        let pu = construct_pi(&u, 2, s, int(2), &PiStrategy::Auto, &grid).unwrap();
        let pv = construct_pi(&v, 2, s, int(2), &PiStrategy::Auto, &grid).unwrap();
        let pw = construct_pi(&w, 2, s, int(2), &PiStrategy::Auto, &grid).unwrap();
        for d in 0..2 {
            for alpha in multi_indices(2, d) {
                let sum = pu.coeff(&alpha) + pv.coeff(&alpha);
                assert!((pw.coeff(&alpha) - sum).abs() < 1e-8, "s = {s}, α = {alpha}");
            }
        }
    }
}

#[test]
fn mixed_regime_uses_ball_average_for_low_degrees() {
    let grid = PolarGrid::default_for(3);
    let u = field("2 + 3*coord_poly([0,1,0]) + gaussian(1)", 3);
    let pi = construct_pi(&u, 2, -1.5, int(2), &PiStrategy::Auto, &grid).unwrap();
    assert_eq!(pi.provenance(&mi(&[0, 1, 0])), Some(&Provenance::LimitAtInfinity));
    assert!(matches!(pi.provenance(&mi(&[0, 0, 0])), Some(Provenance::BallAverage { .. })));
    assert!((pi.coeff(&mi(&[0, 1, 0])) - 3.0).abs() < 1e-8);
    // ball average of 2 + gaussian(1) over B(0, 1) after removing the linear part
    let avg = ball_average_coeff(&field("2 + gaussian(1)", 3), &mi(&[0, 0, 0]), &[0.0; 3], 1.0, &grid.sphere, 24).unwrap();
    assert!((pi.coeff(&mi(&[0, 0, 0])) - avg).abs() < 1e-8);
}

#[test]
fn polynomial_json_layout() {
    let mut p = MultiIndexPolynomial::zero(2, 2);
    p.set(mi(&[1, 0]), -0.5, Provenance::LimitAtInfinity);
    p.set(mi(&[0, 0]), 2.0, Provenance::BallAverage { center: vec![0.0, 0.0], radius: 1.0 });
    let json = serde_json::to_value(&p).unwrap();
    assert_eq!(json["N"], 2);
    assert_eq!(json["k"], 2);
    let coeffs = json["coeffs"].as_array().unwrap();
    assert_eq!(coeffs[0]["alpha"], serde_json::json!([0, 0]));
    assert_eq!(coeffs[0]["provenance"]["rule"], "ball_average");
    let back: MultiIndexPolynomial = serde_json::from_value(json).unwrap();
    assert_eq!(back, p);
    let bad = serde_json::json!({"N": 2, "k": 1, "coeffs": [{"alpha": [1, 0], "value": 1.0, "provenance": {"rule": "zero"}}]});
    assert!(serde_json::from_value::<MultiIndexPolynomial>(bad).is_err());
}

#[test]
fn polynomial_evaluation_and_derivative() {
    let mut p = MultiIndexPolynomial::zero(2, 3);
    p.set(mi(&[2, 0]), 1.0, Provenance::Zero);
    p.set(mi(&[1, 1]), -2.0, Provenance::Zero);
    p.set(mi(&[0, 0]), 0.5, Provenance::Zero);
    assert!((p.eval(&[2.0, 3.0]) - (4.0 - 12.0 + 0.5)).abs() < 1e-14);
    let dx = p.derivative(&mi(&[1, 0]));
    assert!((dx.eval(&[2.0, 3.0]) - (4.0 - 6.0)).abs() < 1e-14);
    assert_eq!(p.degree(), Some(2));
}
