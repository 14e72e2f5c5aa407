use std::f64::consts::{E, PI};

use hsm_core::exponents::ExtendedExponent;
use hsm_core::fields::{parse_field, PolarGrid, ScalarField};
use hsm_core::jet::MultiIndex;
use hsm_core::polyproj::PiStrategy;
use hsm_core::verifier::*;
use hsm_core::wnorms::Scale;
use hsm_core::Error;
use num_rational::Rational64;

fn int(n: i64) -> ExtendedExponent {
    ExtendedExponent::integer(n)
}

fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn field(spec: &str, n: usize) -> ScalarField {
    parse_field(spec, n).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sobolev_case() -> InequalityCase {
    InequalityCase::new(3, 1, 1, rat(-3, 2), int(2), int(6))
}

#[test]
fn constant_field_is_vacuous() {
    let grid = PolarGrid::default_for(3);
    let r = verify_case(&ScalarField::constant(3, 4.0), &sobolev_case(), &grid).unwrap();
    assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, None));
    assert_eq!(r.verdict(), CaseVerdict::Vacuous);
    assert_eq!(r.csv_record()[12], "vacuous");
}

#[test]
fn sobolev_case_matches_closed_form_for_the_extremal() {
    // ‖u‖_6^6 = 4π·π/16, ‖∇u‖_2^2 = 4π·3π/16 for u = (1+|x|²)^{-1/2}
    let grid = PolarGrid::default_for(3);
    let r = verify_case(&field("aubin_talenti(3)", 3), &sobolev_case(), &grid).unwrap();
    let lhs = (PI * PI / 4.0).powf(1.0 / 6.0);
    let rhs = (3.0 * PI * PI / 4.0).sqrt();
    assert!(rel(r.lhs, lhs) < 1e-6, "{} vs {lhs}", r.lhs);
    assert!(rel(r.rhs, rhs) < 1e-8, "{} vs {rhs}", r.rhs);
    assert!(rel(r.ratio.unwrap(), lhs / rhs) < 1e-6);
    assert!(r.pi_u.max_abs_coeff() < 1e-8);
}

#[test]
fn second_order_case_recovers_the_linear_part() {
    let grid = PolarGrid::default_for(3);
    let u = field("0.5 + 2*coord_poly([0,0,1]) + gaussian(1)", 3);
    let case = InequalityCase::new(3, 2, 2, rat(-7, 2), int(2), int(2));
    let r = verify_case(&u, &case, &grid).unwrap();
    assert!(r.ratio.unwrap().is_finite());
    assert!((r.pi_u.coeff(&MultiIndex(vec![0, 0, 0])) - 0.5).abs() < 1e-5);
    assert!((r.pi_u.coeff(&MultiIndex(vec![0, 0, 1])) - 2.0).abs() < 1e-5);
    assert!(r.pi_u.coeff(&MultiIndex(vec![1, 0, 0])).abs() < 1e-5);
    assert_eq!(r.csv_record()[11], "1");
}

#[test]
fn validation_errors() {
    let base = sobolev_case();
    assert!(matches!(base.clone().with_s(rat(-1, 1)).validate(), Err(Error::ExcludedS { .. })));
    let mut q = base.clone();
    q.q = int(7);
    assert!(matches!(q.validate(), Err(Error::InadmissiblePq(_))));
    let one_d = InequalityCase::new(1, 1, 1, rat(-3, 2), int(2), int(2));
    assert!(matches!(one_d.validate(), Err(Error::DimensionOne(_))));
    let exp = InequalityCase::new(3, 1, 1, rat(0, 1), int(2), int(2)).with_scale(Scale::Exponential);
    assert_eq!(exp.validate(), Err(Error::SZero));
    let mut jk = base.clone();
    jk.j = 2;
    assert!(matches!(jk.validate(), Err(Error::InvalidCase(_))));
    let mut p_inf = base;
    p_inf.p = ExtendedExponent::Infinite;
    assert!(p_inf.validate().is_err());
}

#[test]
fn divergent_rhs_is_reported() {
    let grid = PolarGrid::default_for(3);
    let case = InequalityCase::new(3, 1, 1, rat(-1, 2), int(2), int(2));
    let r = verify_case(&field("power(0.5)", 3), &case, &grid);
    assert!(matches!(r, Err(Error::DivergentRhs(_))), "{r:?}");
    let ok = verify_case(&field("power(0.25)", 3), &case, &grid).unwrap();
    assert!(ok.ratio.unwrap().is_finite());
}

#[test]
fn case_json_round_trip() {
    let case = InequalityCase::new(3, 2, 1, rat(-7, 2), int(2), ExtendedExponent::ratio(7, 2))
        .with_strategy(PiStrategy::BallAverages { center: vec![0.0, 1.0, 0.0], radius: 0.5 });
    let text = serde_json::to_string(&case).unwrap();
    assert!(text.contains("\"N\":3") && text.contains("\"s\":\"-7/2\"") && text.contains("\"q\":\"7/2\""));
    let back: InequalityCase = serde_json::from_str(&text).unwrap();
    assert_eq!(back, case);
    let float: InequalityCase = serde_json::from_str(r#"{"N":3,"k":1,"j":1,"s":-1.5,"p":2,"q":6}"#).unwrap();
    assert_eq!(float, sobolev_case());
    assert!(serde_json::from_str::<InequalityCase>(r#"{"N":3,"k":1,"j":1,"s":-1.5,"p":2,"q":6,"r":1}"#).is_err());
}

#[test]
fn dilates_of_a_bump_share_one_constant() {
    let grid = PolarGrid::default_for(3);
    let bump = field("bump(1.5)", 3);
    let family: Vec<ScalarField> = [0.5, 1.0, 2.0, 4.0].iter().map(|&l| bump.dilate(l)).collect();
    let est = estimate_constant(&family, &sobolev_case(), &grid).unwrap();
    let ratios: Vec<f64> = est.reports.iter().map(|r| r.ratio.unwrap()).collect();
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!((est.value - lo) / lo < 0.01, "{ratios:?}");
    assert_eq!(est.skipped.len(), 0);
}

#[test]
fn zero_family_is_empty() {
    let grid = PolarGrid::default_for(3);
    let r = estimate_constant(&[ScalarField::zero(3), ScalarField::constant(3, 1.0)], &sobolev_case(), &grid);
    assert!(matches!(r, Err(Error::EmptyEffective)));
}

#[test]
fn constant_over_random_splines_is_stable() {
    let grid = PolarGrid::default_for(3);
    let family: Vec<ScalarField> = default_family(3, 7).into_iter().take(6).collect();
    let case = InequalityCase::new(3, 1, 1, rat(-2, 1), int(2), int(2));
    let a = estimate_constant(&family, &case, &grid).unwrap();
    let b = estimate_constant(&family, &case, &grid.refined()).unwrap();
    assert!(a.value.is_finite() && a.value > 0.0);
    assert!(rel(b.value, a.value) < 0.05);
    assert_eq!(default_family(3, 7).len(), DEFAULT_FAMILY_SIZE);
}

#[test]
fn decay_of_compactly_supported_remainder() {
    let grid = PolarGrid::default_for(3);
    let case = InequalityCase::new(3, 1, 1, rat(-3, 2), int(4), int(4));
    let d = decay_check(&field("bump(2) + shifted_bump([1,0,0], 0.5)", 3), &case, &grid).unwrap();
    assert!(d.decaying);
    assert!(d.points.iter().skip(2).all(|p| p.1 == 0.0), "{:?}", d.points);
}

#[test]
fn decay_in_one_dimension() {
    let grid = PolarGrid::default_for(1);
    let case = InequalityCase::new(1, 1, 1, rat(0, 1), int(2), int(2));
    let d = decay_check(&field("gaussian(1)", 1), &case, &grid).unwrap();
    assert!(d.decaying);
    assert!(d.points.last().unwrap().1 < 1e-3);
}

#[test]
fn morrey_decay_is_strictly_decreasing() {
    let grid = PolarGrid::default_for(3);
    let case = InequalityCase::new(3, 1, 1, rat(-3, 4), int(4), int(4));
    let d = decay_check(&field("gaussian(1)", 3), &case, &grid).unwrap();
    let tail: Vec<f64> = d.points[d.points.len() - 5..].iter().map(|p| p.1).collect();
    assert!(tail.windows(2).all(|w| w[1] < w[0]), "{tail:?}");
}

#[test]
fn decay_needs_p_above_critical() {
    let grid = PolarGrid::default_for(3);
    let r = decay_check(&field("gaussian(1)", 3), &sobolev_case(), &grid);
    assert!(matches!(r, Err(Error::InadmissiblePq(_))));
}

// θ-averaged integrands for u = x₁ b(r) in the plane, b the bump of radius 2
fn bump(r: f64) -> f64 {
    if r >= 2.0 { 0.0 } else { E * (-1.0 / (1.0 - r * r / 4.0)).exp() }
}

fn bump_d(r: f64) -> f64 {
    let t = 1.0 - r * r / 4.0;
    if r >= 2.0 { 0.0 } else { -bump(r) * (r / 2.0) / (t * t) }
}

#[test]
fn mean_zero_inequality_matches_quadrature() {
    let grid = PolarGrid::default_for(2);
    let u = field("coord_poly([1,0]) * bump(2)", 2);
    let r = ckn_split_verify(&u, 0.0, int(2), int(2), &grid).unwrap();
    let fine = ckn_split_verify(&u, 0.0, int(2), int(2), &grid.refined()).unwrap();
    let de = |f: &dyn Fn(f64) -> f64| quadrature::double_exponential::integrate(f, 0.0, 2.0, 1e-13).integral;
    let lhs = (PI * de(&|r| r.powi(3) * bump(r).powi(2))).sqrt();
    let rhs = (2.0 * PI * de(&|r| r.powi(3) * (bump(r).powi(2) + r * bump(r) * bump_d(r) + 0.5 * r * r * bump_d(r).powi(2)))).sqrt();
    assert!(rel(r.lhs, lhs) < 1e-7, "{} vs {lhs}", r.lhs);
    assert!(rel(r.rhs, rhs) < 1e-5, "{} vs {rhs}", r.rhs);
    assert!(rel(fine.rhs, rhs) < 1e-7, "{} vs {rhs}", fine.rhs);
    assert_eq!(r.case.scale, Scale::PurePower);
    assert_eq!(r.case.s, rat(-2, 1));
}

#[test]
fn mean_zero_preconditions() {
    let grid = PolarGrid::default_for(2);
    let z = ckn_split_verify(&ScalarField::zero(2), 0.0, int(2), int(2), &grid).unwrap();
    assert_eq!(z.verdict(), CaseVerdict::Vacuous);
    let g = ckn_split_verify(&field("gaussian(1)", 2), 0.0, int(2), int(2), &grid);
    assert!(matches!(g, Err(Error::NotMeanZero(_))));
    let g1 = PolarGrid::default_for(1);
    assert!(ckn_split_verify(&field("coord_poly([1]) * bump(1)", 1), 0.0, int(2), int(2), &g1).is_err());
}

#[test]
fn symmetrization_split_examples() {
    let grid = PolarGrid::default_for(3);
    let case = InequalityCase::new(3, 1, 1, rat(-2, 1), int(2), int(2));

    let radial = symmetrization_split(&field("gaussian(1)", 3), &case, &grid).unwrap();
    assert!(radial.mean_zero.rhs < 1e-12 * radial.radial.rhs);
    assert!(radial.mean_zero.lhs < 1e-12 * radial.radial.lhs);

    let odd = symmetrization_split(&field("coord_poly([1,0,0]) * bump(2)", 3), &case, &grid).unwrap();
    assert!(odd.grad_norm_symmetrized < 1e-12);
    assert!(odd.radial.rhs < 1e-12 * odd.mean_zero.rhs);

    let mixed = symmetrization_split(&field("gaussian(1) + coord_poly([1,0,0]) * bump(2)", 3), &case, &grid).unwrap();
    assert!(mixed.contraction_ok);
    assert!(mixed.radial.ratio.unwrap().is_finite());
    assert!(mixed.mean_zero.ratio.unwrap().is_finite());
    assert!(mixed.grad_norm_symmetrized <= mixed.grad_norm);

    let k2 = InequalityCase::new(3, 2, 1, rat(-5, 2), int(2), int(2));
    assert!(symmetrization_split(&field("gaussian(1)", 3), &k2, &grid).is_err());
}

#[test]
fn hardy_case_converges_as_lambda_shrinks() {
    let grid = PolarGrid::default_for(3);
    let case = InequalityCase::new(3, 1, 1, rat(-3, 4), int(4), int(4)).with_strategy(PiStrategy::Taylor { point: vec![0.0; 3] });
    let lambdas = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let reps = scaling_experiment(&field("gaussian(1)", 3), &case, &lambdas, &grid).unwrap();
    let ratios: Vec<f64> = reps.iter().map(|r| r.report.ratio.unwrap()).collect();
    let steps: Vec<f64> = ratios.windows(2).map(|w| rel(w[1], w[0])).collect();
    assert!(steps.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(*steps.last().unwrap() < 0.02, "{ratios:?}");
    for r in &reps {
        assert!((r.report.pi_u.coeff(&MultiIndex(vec![0, 0, 0])) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lambda_one_is_verify_case() {
    let grid = PolarGrid::default_for(3);
    let u = field("gaussian(1) + 0.5*bump(2)", 3);
    let reps = scaling_experiment(&u, &sobolev_case(), &[1.0], &grid).unwrap();
    assert_eq!(reps[0].report, verify_case(&u, &sobolev_case(), &grid).unwrap());
    let exp = sobolev_case().with_scale(Scale::Exponential);
    assert!(scaling_experiment(&u, &exp, &[1.0], &grid).is_err());
}

#[test]
fn sobolev_ratio_is_dilation_invariant() {
    let grid = PolarGrid::default_for(3);
    let u = field("gaussian(1) + 0.5*bump(2)", 3);
    let reps = scaling_experiment(&u, &sobolev_case(), &[0.25, 1.0, 4.0], &grid).unwrap();
    let r0 = reps[1].report.ratio.unwrap();
    for r in &reps {
        assert!(rel(r.report.ratio.unwrap(), r0) < 0.01);
    }
}

#[test]
fn exponential_scale_recovers_the_constant() {
    let grid = PolarGrid::default_for(3);
    let case = InequalityCase::new(3, 1, 1, rat(-1, 1), int(2), int(2)).with_scale(Scale::Exponential);
    let r = exp_verify(&field("-2 + gaussian(1)", 3), &case, &grid).unwrap();
    assert!((r.pi_u.coeff(&MultiIndex(vec![0, 0, 0])) + 2.0).abs() < 1e-4);
    assert!(r.ratio.unwrap().is_finite());
    assert_eq!(exp_verify(&field("gaussian(1)", 3), &case.clone().with_s(rat(0, 1)), &grid), Err(Error::SZero));
    let above = case.with_s(rat(1, 2));
    let r = exp_verify(&field("gaussian(1)", 3), &above, &grid).unwrap();
    assert!(r.ratio.unwrap().is_finite());
}

#[test]
fn blow_up_scan_grows_toward_the_excluded_value() {
    let grid = PolarGrid::default_for(3);
    let case = InequalityCase::new(3, 1, 1, rat(-3, 2), int(2), int(2));
    let (below, above) = blow_up_scan(&field("gaussian(1)", 3), &case, -1, &[0.4, 0.2, 0.1], &grid).unwrap();
    let b: Vec<f64> = below.iter().map(|p| p.ratio.unwrap()).collect();
    let a: Vec<f64> = above.iter().map(|p| p.ratio.unwrap()).collect();
    assert!(b.windows(2).all(|w| w[1] > w[0]), "{b:?}");
    assert!(a.windows(2).all(|w| w[1] > w[0]), "{a:?}");
    assert!((below[0].s + 1.4).abs() < 1e-12 && (above[0].s + 0.6).abs() < 1e-12);
}

#[test]
fn embedding_report_for_a_schwartz_field() {
    let grid = PolarGrid::default_for(2);
    let u = field("gaussian(1) + coord_poly([1,0]) * gaussian(0.5)", 2);
    let e = embedding_report(&u, 2, rat(-5, 2), int(2), int(4), &grid).unwrap();
    assert!(e.in_wkpp && e.in_wkqp && e.pi_membership);
    assert!(e.full_to_seminorm >= 1.0 && e.full_to_seminorm.is_finite());
    assert_eq!(e.intermediate_ratios.len(), 1);
    assert!(rel(e.norm_wkpp / e.seminorm, e.full_to_seminorm) < 1e-14);
    assert!(embedding_report(&u, 2, rat(-2, 1), int(2), int(4), &grid).is_err());
}

#[test]
fn report_serializes() {
    let grid = PolarGrid::default_for(3);
    let r = verify_case(&field("aubin_talenti(3)", 3), &sobolev_case(), &grid).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["case"]["s"], "-3/2");
    assert_eq!(v["diagnostics"]["field"], "aubin_talenti(3)");
    let back: Report = serde_json::from_value(v).unwrap();
    assert_eq!(back.csv_record(), r.csv_record());
    assert_eq!(r.csv_record().len(), Report::CSV_HEADER.len());
}
