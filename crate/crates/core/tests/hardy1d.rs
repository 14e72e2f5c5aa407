use hsm_core::exponents::{admissible_interval, ExtendedExponent};
use hsm_core::hardy1d::*;
use hsm_core::Error;

fn int(n: i64) -> ExtendedExponent {
    ExtendedExponent::integer(n)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn profile(f: fn(f64) -> f64, df: fn(f64) -> f64) -> RadialProfile {
    RadialProfile::new(f).with_derivative(df)
}

#[test]
fn constant_profile_has_zero_lhs_above() {
    let f = profile(|_| 2.0, |_| 0.0);
    let (lhs, rhs) = hardy_pair_power_above(&f, 0.5, int(2), int(3), 1.0, 2).unwrap();
    assert_eq!((lhs, rhs), (0.0, 0.0));
    let (lhs, _) = hardy_sup_power_above(&f, 0.5, int(2), 1.0, 2).unwrap();
    assert_eq!(lhs, 0.0);
}

#[test]
fn linear_profile_above_matches_closed_form() {
    // s = 1/2, p = q = 2, ρ = 1, N = 1: lhs² = 1/6, rhs² = 1/2
    let f = profile(|r| r, |_| 1.0);
    let (lhs, rhs) = hardy_pair_power_above(&f, 0.5, int(2), int(2), 1.0, 1).unwrap();
    assert!(rel(lhs, (1.0f64 / 6.0).sqrt()) < 1e-8, "{lhs}");
    assert!(rel(rhs, 0.5f64.sqrt()) < 1e-8, "{rhs}");
}

#[test]
fn linear_profile_at_critical_growth_diverges() {
    let f = profile(|r| r, |_| 1.0);
    let r = hardy_pair_power_above(&f, 0.0, int(2), int(2), 1.0, 1);
    assert!(matches!(r, Err(Error::DivergentRhs(_))), "{r:?}");
}

#[test]
fn square_root_profile_above() {
    // s = 0.6, p = q = 2, ρ = 1, N = 2
    let f = profile(|r| (1.0 + r).sqrt(), |r| 0.5 / (1.0 + r).sqrt());
    let (lhs, rhs) = hardy_pair_power_above(&f, 0.6, int(2), int(2), 1.0, 2).unwrap();
    let rhs_exact = (0.25 * (2f64.powf(-2.2) / 2.2 - 2f64.powf(-3.2) / 3.2)).sqrt();
    assert!(rel(rhs, rhs_exact) < 1e-8, "{rhs} vs {rhs_exact}");
    // ∫_1^∞ r (1+r)^{-5.2} ((1+r)^{1/2} - √2)² dr, mapped to t = 1/(1+r)
    let lhs_exact = quadrature::double_exponential::integrate(
        |t: f64| {
            let w = 1.0 / t;
            (w - 1.0) * w.powf(-5.2) * (w.sqrt() - 2f64.sqrt()).powi(2) / (t * t)
        },
        0.0,
        0.5,
        1e-14,
    )
    .integral
    .sqrt();
    assert!(rel(lhs, lhs_exact) < 1e-7, "{lhs} vs {lhs_exact}");
    assert!(lhs / rhs < 10.0);
}

#[test]
fn log_profile_sup_above() {
    // lhs = sup (1+r)^{-1}|ln(1+r) - ln 2| = 1/(2e); rhs = (∫_2^∞ w^{-4} dw)^{1/3}
    let f = profile(|r| r.ln_1p(), |r| 1.0 / (1.0 + r));
    let (lhs, rhs) = hardy_sup_power_above(&f, 0.0, int(3), 1.0, 1).unwrap();
    assert!(rel(lhs, 0.5 / std::f64::consts::E) < 1e-5, "{lhs}");
    assert!(rel(rhs, (1.0f64 / 24.0).cbrt()) < 1e-8, "{rhs}");
}

#[test]
fn sup_above_is_nonincreasing_in_r() {
    let f = profile(|r| r.ln_1p(), |r| 1.0 / (1.0 + r));
    let lhs: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|&big_r| hardy_sup_power_above(&f, 0.0, int(3), big_r, 1).unwrap().0).collect();
    assert!(lhs.windows(2).all(|w| w[1] <= w[0]), "{lhs:?}");
}

#[test]
fn zero_profile_below() {
    let f = profile(|_| 0.0, |_| 0.0).decaying();
    assert_eq!(hardy_pair_power_below(&f, -2.0, int(2), int(2), 3).unwrap(), (0.0, 0.0));
}

#[test]
fn inverse_square_profile_below_matches_beta() {
    // s = -2, p = q = 2, N = 3: lhs² = B(3,2) = 1/12, rhs² = 4/12
    let f = profile(|r| (1.0 + r).powi(-2), |r| -2.0 * (1.0 + r).powi(-3)).decaying();
    let (lhs, rhs) = hardy_pair_power_below(&f, -2.0, int(2), int(2), 3).unwrap();
    assert!(rel(lhs, (1.0f64 / 12.0).sqrt()) < 1e-8, "{lhs}");
    assert!(rel(rhs, (1.0f64 / 3.0).sqrt()) < 1e-8, "{rhs}");
}

#[test]
fn inverse_profile_at_critical_decay_diverges() {
    let f = profile(|r| 1.0 / (1.0 + r), |r| -(1.0 + r).powi(-2)).decaying();
    let r = hardy_pair_power_below(&f, -2.0, int(2), int(2), 3);
    assert!(matches!(r, Err(Error::DivergentRhs(_))), "{r:?}");
}

#[test]
fn exponential_profile_below_with_p_one() {
    let f = profile(|r| (-r).exp(), |r| -(-r).exp()).decaying();
    let (lhs, rhs) = hardy_pair_power_below(&f, -3.0, int(1), ExtendedExponent::ratio(3, 2), 3).unwrap();
    assert!(lhs.is_finite() && rhs.is_finite() && rhs > 0.0);
    assert!(lhs / rhs < 10.0);
}

#[test]
fn below_checks_preconditions() {
    let f = profile(|r| (1.0 + r).powi(-2), |r| -2.0 * (1.0 + r).powi(-3));
    assert_eq!(hardy_pair_power_below(&f, -2.0, int(2), int(2), 3), Err(Error::NoDecay));
    let f = f.decaying();
    assert!(matches!(hardy_pair_power_below(&f, -2.0, int(2), int(7), 3), Err(Error::InadmissiblePq(_))));
    assert!(matches!(hardy_pair_power_below(&f, -0.5, int(2), int(2), 3), Err(Error::InvalidCase(_))));
    assert!(matches!(hardy_sup_power_below(&f, -2.0, int(2), 1.0, 3), Err(Error::InadmissiblePq(_))));
}

#[test]
fn sup_below_matches_closed_form() {
    // s = -2, p = 3, N = 2, R = 1: lhs = 1/2 at r = R, rhs³ = 5/24
    let f = profile(|r| (1.0 + r).powi(-2), |r| -2.0 * (1.0 + r).powi(-3)).decaying();
    let (lhs, rhs) = hardy_sup_power_below(&f, -2.0, int(3), 1.0, 2).unwrap();
    assert!(rel(lhs, 0.5) < 1e-12, "{lhs}");
    assert!(rel(rhs, (5.0f64 / 24.0).cbrt()) < 1e-8, "{rhs}");
}

#[test]
fn criterion_examples() {
    let grid = default_xi_grid();
    assert_eq!(ok_criterion(-2.0, int(2), int(2), 3, &grid).unwrap().verdict, Verdict::Finite);
    assert_eq!(ok_criterion(-2.0, int(2), int(6), 3, &grid).unwrap().verdict, Verdict::Finite);
    assert_eq!(ok_criterion(-2.0, int(2), int(7), 3, &grid).unwrap().verdict, Verdict::Divergent);
    assert_eq!(ok_criterion(-2.0, int(3), ExtendedExponent::Infinite, 2, &grid).unwrap().verdict, Verdict::Finite);
    assert_eq!(ok_criterion(-2.0, int(2), ExtendedExponent::Infinite, 2, &grid).unwrap().verdict, Verdict::Divergent);
}

#[test]
fn criterion_agrees_with_the_interval() {
    let grid = default_xi_grid();
    for n in [2, 3, 4] {
        for p in [int(1), ExtendedExponent::ratio(3, 2), int(2), int(4)] {
            for q in [p, int(3), int(5), int(8), ExtendedExponent::Infinite] {
                if q < p {
                    continue;
                }
                let v = ok_criterion(-2.5, p, q, n, &grid).unwrap().verdict;
                let inside = admissible_interval(1, p, n).contains(q);
                assert_eq!(v == Verdict::Finite, inside, "N={n} p={p} q={q}");
            }
        }
    }
}

#[test]
fn criterion_profile_shape() {
    let rep = ok_criterion(-2.0, int(2), int(4), 3, &default_xi_grid()).unwrap();
    assert_eq!(rep.profile.len(), 97);
    for &(xi, a, b, ab) in &rep.profile {
        assert!(xi > 0.0 && a > 0.0 && b > 0.0);
        assert!(rel(ab, a * b) < 1e-12);
        assert!(ab <= rep.sup_estimate * (1.0 + 1e-12));
    }
}

#[test]
fn criterion_rejects_bad_parameters() {
    let grid = default_xi_grid();
    assert!(ok_criterion(-0.5, int(2), int(2), 3, &grid).is_err());
    assert!(ok_criterion(-2.0, int(3), int(2), 3, &grid).is_err());
}

#[test]
fn exponential_constant_above_is_zero() {
    let f = profile(|_| 1.0, |_| 0.0);
    let (lhs, _) = hardy_exponential(&f, 1.0, int(2), 1, ExpVariant::Above(1.0)).unwrap();
    assert_eq!(lhs, 0.0);
}

#[test]
fn exponential_linear_above_closed_form() {
    // s = 1, p = 2, N = 1, ρ = 1: lhs² = e^{-2}/4, rhs² = e^{-2}/2
    let f = profile(|r| r, |_| 1.0);
    let (lhs, rhs) = hardy_exponential(&f, 1.0, int(2), 1, ExpVariant::Above(1.0)).unwrap();
    let e2 = (-2.0f64).exp();
    assert!(rel(lhs, (e2 / 4.0).sqrt()) < 1e-8, "{lhs}");
    assert!(rel(rhs, (e2 / 2.0).sqrt()) < 1e-8, "{rhs}");
}

#[test]
fn exponential_below_closed_form() {
    // f = e^{-2r}, s = -1, p = 2, N = 3: lhs² = ∫ r² e^{-2r} = 1/4, rhs² = 1
    let f = profile(|r| (-2.0 * r).exp(), |r| -2.0 * (-2.0 * r).exp()).decaying();
    let (lhs, rhs) = hardy_exponential(&f, -1.0, int(2), 3, ExpVariant::Below).unwrap();
    assert!(rel(lhs, 0.5) < 1e-8, "{lhs}");
    assert!(rel(rhs, 1.0) < 1e-8, "{rhs}");
}

#[test]
fn exponential_below_at_critical_decay_diverges() {
    let f = profile(|r| (-r).exp(), |r| -(-r).exp()).decaying();
    let r = hardy_exponential(&f, -1.0, int(2), 3, ExpVariant::Below);
    assert!(matches!(r, Err(Error::DivergentRhs(_))), "{r:?}");
}

#[test]
fn exponential_variant_preconditions() {
    let f = profile(|r| (-r).exp(), |r| -(-r).exp());
    assert_eq!(hardy_exponential(&f, 0.0, int(2), 1, ExpVariant::Below), Err(Error::SZero));
    assert_eq!(hardy_exponential(&f, -1.0, int(2), 1, ExpVariant::Below), Err(Error::NoDecay));
    assert!(matches!(hardy_exponential(&f, -1.0, int(2), 1, ExpVariant::Above(1.0)), Err(Error::InvalidCase(_))));
}

#[test]
fn numerical_derivative_tracks_the_analytic_one() {
    let fd = RadialProfile::new(|r: f64| (1.0 + r * r).sqrt());
    for r in [0.1f64, 1.0, 10.0, 1e3] {
        let exact = r / (1.0 + r * r).sqrt();
        assert!((fd.derivative(r) - exact).abs() < 1e-8 * (1.0 + exact.abs()), "r = {r}");
    }
    assert!(RadialProfile::new(|r: f64| (-r).exp()).decays_numerically());
    assert!(!RadialProfile::new(|r: f64| r.ln_1p()).decays_numerically());
}
