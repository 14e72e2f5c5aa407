//! End-to-end verification of the weighted growth-transfer inequalities:
//! single cases, empirical constants, decay profiles, the mean-zero split,
//! dilation studies, embedding norms and the exponential scale.

use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exponents::{
    admissible_interval, parse_rational, rational_from_f64, rational_to_f64, regime_exact, ExtendedExponent,
    RegimeComponent,
};
use crate::fields::{
    annulus_max_fn, gradient_k, norm, radial_symmetrize_with, random_radial_spline, spherical_mean_with, Domain,
    PolarGrid, ScalarField,
};
use crate::polyproj::{construct_pi_with, poly_membership, MultiIndexPolynomial, PiOptions, PiStrategy};
use crate::wnorms::{norm_of_magnitude, tensor_norm_detailed, Region, Scale, Weight};

mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational64, D::Error> {
        use serde::de::Error as _;
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(Rational64::from_integer(i)),
            Raw::Float(x) => rational_from_f64(x).map_err(D::Error::custom),
            Raw::Text(t) => parse_rational(&t).map_err(D::Error::custom),
        }
    }
}

/// One instance `(N, k, j, s, p, q, scale)` of the inequality family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityCase {
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    pub j: usize,
    #[serde(with = "rational_str")]
    pub s: Rational64,
    pub p: ExtendedExponent,
    pub q: ExtendedExponent,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub domain: Domain,
    #[serde(default)]
    pub pi_strategy: PiStrategy,
    /// Partial construction: only the layers of degree `≥ k - ell` are built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
}

impl InequalityCase {
    pub fn new(n: usize, k: usize, j: usize, s: Rational64, p: ExtendedExponent, q: ExtendedExponent) -> Self {
        InequalityCase {
            n,
            k,
            j,
            s,
            p,
            q,
            scale: Scale::ShiftedPower,
            domain: Domain::FullSpace,
            pi_strategy: PiStrategy::Auto,
            ell: None,
        }
    }

    pub fn with_scale(mut self, scale: Scale) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_strategy(mut self, strategy: PiStrategy) -> Self {
        self.pi_strategy = strategy;
        self
    }

    pub fn with_s(mut self, s: Rational64) -> Self {
        self.s = s;
        self
    }

    pub fn s_f64(&self) -> f64 {
        rational_to_f64(self.s)
    }

    /// Checks every hypothesis that does not need quadrature.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 8 {
            return Err(Error::InvalidCase(format!("N = {} outside 1..=8", self.n)));
        }
        if self.k == 0 || self.j == 0 || self.j > self.k {
            return Err(Error::InvalidCase(format!("need 1 ≤ j ≤ k (j = {}, k = {})", self.j, self.k)));
        }
        if let Some(l) = self.ell {
            if l < self.j || l > self.k {
                return Err(Error::InvalidCase(format!("need j ≤ ell ≤ k (ell = {l})")));
            }
        }
        if self.domain != Domain::FullSpace && self.n != 1 {
            return Err(Error::InvalidCase("half-line domains need N = 1".into()));
        }
        if !self.p.is_finite() {
            return Err(Error::InadmissiblePq("p must be finite".into()));
        }
        let full_line = self.n == 1 && self.domain == Domain::FullSpace;
        let zero = Rational64::from_integer(0);
        match self.scale {
            Scale::Exponential => {
                if self.s == zero {
                    return Err(Error::SZero);
                }
                if self.s < zero && full_line {
                    return Err(Error::DimensionOne(self.s_f64()));
                }
            }
            _ => {
                if regime_exact(self.s, self.k).component == RegimeComponent::Excluded {
                    return Err(Error::ExcludedS { s: self.s_f64(), k: self.k });
                }
                if self.s < Rational64::from_integer(-1) && full_line {
                    return Err(Error::DimensionOne(self.s_f64()));
                }
            }
        }
        let interval = admissible_interval(self.j, self.p, self.n);
        if !interval.contains(self.q) {
            return Err(Error::InadmissiblePq(format!("q = {} ∉ I_{{{},{}}} = {interval}", self.q, self.j, self.p)));
        }
        Ok(())
    }

    fn pi_options(&self) -> PiOptions {
        PiOptions {
            exponential: self.scale == Scale::Exponential,
            min_degree: self.ell.map_or(0, |l| self.k - l),
            ..PiOptions::default()
        }
    }

    /// Growth index of the left-hand norm.
    fn lhs_s(&self) -> f64 {
        match self.scale {
            Scale::Exponential => self.s_f64(),
            _ => self.s_f64() + self.j as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseVerdict {
    Finite,
    /// `rhs = 0`: the inequality holds trivially and the ratio is undefined.
    Vacuous,
}

impl std::fmt::Display for CaseVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseVerdict::Finite => "finite",
            CaseVerdict::Vacuous => "vacuous",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub field: String,
    pub verdict: Option<CaseVerdict>,
    pub lhs_tail_fraction: f64,
    pub rhs_tail_fraction: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub case: InequalityCase,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub pi_u: MultiIndexPolynomial,
    pub decay_profile: Vec<(f64, f64)>,
    pub diagnostics: Diagnostics,
}

impl Report {
    pub const CSV_HEADER: [&'static str; 13] =
        ["field", "N", "k", "j", "s", "p", "q", "scale", "lhs", "rhs", "ratio", "pi_degree", "verdict"];

    pub fn verdict(&self) -> CaseVerdict {
        self.diagnostics.verdict.unwrap_or(if self.ratio.is_some() { CaseVerdict::Finite } else { CaseVerdict::Vacuous })
    }

    /// One flat row in the order of [`Report::CSV_HEADER`].
    pub fn csv_record(&self) -> Vec<String> {
        let c = &self.case;
        vec![
            self.diagnostics.field.clone(),
            c.n.to_string(),
            c.k.to_string(),
            c.j.to_string(),
            c.s.to_string(),
            c.p.to_string(),
            c.q.to_string(),
            c.scale.to_string(),
            format!("{:e}", self.lhs),
            format!("{:e}", self.rhs),
            self.ratio.map(|r| format!("{r:e}")).unwrap_or_default(),
            self.pi_u.degree_with_tol(crate::polyproj::POLY_ZERO_TOL).map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
            self.verdict().to_string(),
        ]
    }
}

fn check_grid(case: &InequalityCase, grid: &PolarGrid) -> Result<()> {
    if grid.dim != case.n {
        return Err(Error::InvalidCase(format!("grid dimension {} != N = {}", grid.dim, case.n)));
    }
    Ok(())
}

fn remainder(u: &ScalarField, pi: &MultiIndexPolynomial) -> ScalarField {
    if pi.max_abs_coeff() > 0.0 { u.difference(&pi.to_field()) } else { u.clone() }
}

/// Builds `π_u`, then compares `‖∇^{k-j}(u − π_u)‖_{L^q_{s+j}}` with `‖∇^k u‖_{L^p_s}`.
pub fn verify_case(u: &ScalarField, case: &InequalityCase, grid: &PolarGrid) -> Result<Report> {
    case.validate()?;
    check_grid(case, grid)?;
    let s = case.s_f64();
    let mut notes = Vec::new();
    if case.scale == Scale::PurePower && s < -(case.n as f64) / case.p.to_f64() {
        let grad = gradient_k(u, case.k, grid)?;
        let local = norm_of_magnitude(&|x: &[f64]| grad.magnitude_at(x), u.is_radial(), &Weight::PurePower(0.0), case.p, Region::Ball(1.0), grid)?;
        if !local.value.is_finite() {
            return Err(Error::LocalIntegrability(format!("∇^{} u ∉ L^p(B_1)", case.k)));
        }
        notes.push("local integrability on B_1 checked".into());
    }
    let rhs_est = tensor_norm_detailed(&gradient_k(u, case.k, grid)?, s, case.p, case.scale, Region::Full, grid)?;
    if !rhs_est.value.is_finite() {
        return Err(Error::DivergentRhs(format!("‖∇^{} {}‖ is infinite", case.k, u.label())));
    }
    let pi = construct_pi_with(u, case.k, s, case.p, &case.pi_strategy, grid, &case.pi_options())?;
    let v = remainder(u, &pi);
    let lhs_est = tensor_norm_detailed(&gradient_k(&v, case.k - case.j, grid)?, case.lhs_s(), case.q, case.scale, Region::Full, grid)?;
    let decay_profile = if decay_admissible(case) && case.scale != Scale::Exponential {
        decay_profile_of(&v, case, grid)?
    } else {
        Vec::new()
    };
    let vacuous = rhs_est.value == 0.0;
    let ratio = if vacuous { None } else { Some(lhs_est.value / rhs_est.value) };
    if vacuous {
        notes.push("rhs vanishes; inequality holds trivially".into());
    }
    Ok(Report {
        case: case.clone(),
        lhs: lhs_est.value,
        rhs: rhs_est.value,
        ratio,
        pi_u: pi,
        decay_profile,
        diagnostics: Diagnostics {
            field: u.label().to_string(),
            verdict: Some(if vacuous { CaseVerdict::Vacuous } else { CaseVerdict::Finite }),
            lhs_tail_fraction: lhs_est.tail_fraction,
            rhs_tail_fraction: rhs_est.tail_fraction,
            notes,
        },
    })
}

/// Same as [`verify_case`] in the exponential scale.
pub fn exp_verify(u: &ScalarField, case: &InequalityCase, grid: &PolarGrid) -> Result<Report> {
    if case.s == Rational64::from_integer(0) {
        return Err(Error::SZero);
    }
    let case = InequalityCase { scale: Scale::Exponential, ..case.clone() };
    verify_case(u, &case, grid)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantEstimate {
    /// Max ratio over the effective members: an empirical lower bound for the optimal constant.
    pub value: f64,
    pub argmax: String,
    pub reports: Vec<Report>,
    pub skipped: Vec<(String, String)>,
}

/// Max of [`verify_case`] ratios over `family`; errors and vacuous members are skipped.
pub fn estimate_constant(family: &[ScalarField], case: &InequalityCase, grid: &PolarGrid) -> Result<ConstantEstimate> {
    case.validate()?;
    let results: Vec<(String, Result<Report>)> =
        family.par_iter().map(|u| (u.label().to_string(), verify_case(u, case, grid))).collect();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for (label, r) in results {
        match r {
            Ok(rep) if rep.ratio.is_some() => reports.push(rep),
            Ok(_) => skipped.push((label, "vacuous".to_string())),
            Err(e) => skipped.push((label, e.to_string())),
        }
    }
    let best = reports
        .iter()
        .filter_map(|r| r.ratio.map(|x| (x, r.diagnostics.field.clone())))
        .fold(None, |acc: Option<(f64, String)>, (x, l)| match acc {
            Some((y, _)) if y >= x => acc,
            _ => Some((x, l)),
        });
    let Some((value, argmax)) = best else {
        return Err(Error::EmptyEffective);
    };
    Ok(ConstantEstimate { value, argmax, reports, skipped })
}

fn decay_admissible(case: &InequalityCase) -> bool {
    let p = case.p.to_f64();
    p > case.n as f64 / case.j as f64 || (p == 1.0 && case.n == 1 && case.j == 1)
}

const DECAY_RESOLUTION: usize = 24;

fn decay_profile_of(v: &ScalarField, case: &InequalityCase, grid: &PolarGrid) -> Result<Vec<(f64, f64)>> {
    let order = case.k - case.j;
    let t = gradient_k(v, order, grid)?;
    let expo = -(case.s_f64() + case.j as f64);
    let g = |x: &[f64]| {
        let m = t.magnitude_at(x);
        if m == 0.0 { 0.0 } else { norm(x).powf(expo) * m }
    };
    Ok((0..=12)
        .map(|m| {
            let tau = 2f64.powi(m);
            (tau, annulus_max_fn(case.n, &g, v.is_radial(), tau, DECAY_RESOLUTION, &grid.sphere))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    /// `(τ, max_{τ<|x|<2τ} |x|^{-(s+j)} |∇^{k-j}(u − π_u)|)` for `τ = 2^m`, `m = 0..12`.
    pub points: Vec<(f64, f64)>,
    pub decaying: bool,
}

/// Annulus maxima of the weighted remainder; decaying when the last three
/// values strictly decrease or vanish.
pub fn decay_check(u: &ScalarField, case: &InequalityCase, grid: &PolarGrid) -> Result<DecayProfile> {
    if !decay_admissible(case) {
        return Err(Error::InadmissiblePq(format!(
            "pointwise decay needs p > N/j or p = N = j = 1 (p = {}, N = {}, j = {})",
            case.p, case.n, case.j
        )));
    }
    let case = InequalityCase { q: ExtendedExponent::Infinite, ..case.clone() };
    case.validate()?;
    check_grid(&case, grid)?;
    let pi = construct_pi_with(u, case.k, case.s_f64(), case.p, &case.pi_strategy, grid, &case.pi_options())?;
    let points = decay_profile_of(&remainder(u, &pi), &case, grid)?;
    let tail: Vec<f64> = points[points.len() - 3..].iter().map(|t| t.1).collect();
    let decaying = tail.iter().all(|v| *v == 0.0) || tail.windows(2).all(|w| w[1] < w[0]);
    Ok(DecayProfile { points, decaying })
}

/// Largest `|u_S(r)|` over `r = 2^m`, `m = -6..=12`.
pub fn max_spherical_mean(u: &ScalarField, grid: &PolarGrid) -> f64 {
    (-6..=12)
        .map(|m| spherical_mean_with(u, 2f64.powi(m), &grid.sphere).abs())
        .fold(0.0, f64::max)
}

pub const MEAN_ZERO_TOL: f64 = 1e-8;

/// Pure-power inequality for mean-zero fields:
/// `‖|x|^{(a+N)/p − N/q} u‖_q` against `‖|x|^{1+a/p} ∇u‖_p`.
pub fn ckn_split_verify(u: &ScalarField, a: f64, p: ExtendedExponent, q: ExtendedExponent, grid: &PolarGrid) -> Result<Report> {
    let n = u.dim();
    if n < 2 {
        return Err(Error::InvalidCase("the mean-zero inequality needs N > 1".into()));
    }
    if !p.is_finite() {
        return Err(Error::InadmissiblePq("p must be finite".into()));
    }
    if !admissible_interval(1, p, n).contains(q) {
        return Err(Error::InadmissiblePq(format!("q = {q} ∉ {}", admissible_interval(1, p, n))));
    }
    let mean = max_spherical_mean(u, grid);
    if mean > MEAN_ZERO_TOL {
        return Err(Error::NotMeanZero(mean));
    }
    let pf = p.to_f64();
    let nf = n as f64;
    let grad = gradient_k(u, 1, grid)?;
    let base = norm_of_magnitude(&|x: &[f64]| u.value(x), u.is_radial(), &Weight::PurePower(a / pf), p, Region::Full, grid)?;
    if !base.value.is_finite() {
        return Err(Error::NonIntegrable("|x|^{a/p} u ∉ L^p".into()));
    }
    let rhs = norm_of_magnitude(&|x: &[f64]| grad.magnitude_at(x), u.is_radial(), &Weight::PurePower(1.0 + a / pf), p, Region::Full, grid)?;
    if !rhs.value.is_finite() {
        return Err(Error::DivergentRhs("|x|^{1+a/p} ∇u ∉ L^p".into()));
    }
    let lhs = norm_of_magnitude(&|x: &[f64]| u.value(x), u.is_radial(), &Weight::PurePower((a + nf) / pf - q.dim_over(n)), q, Region::Full, grid)?;
    let s = rational_from_f64(-(a + nf) / pf - 1.0)?;
    let case = InequalityCase::new(n, 1, 1, s, p, q).with_scale(Scale::PurePower);
    let vacuous = rhs.value == 0.0;
    Ok(Report {
        case,
        lhs: lhs.value,
        rhs: rhs.value,
        ratio: if vacuous { None } else { Some(lhs.value / rhs.value) },
        pi_u: MultiIndexPolynomial::zero(n, 1),
        decay_profile: Vec::new(),
        diagnostics: Diagnostics {
            field: u.label().to_string(),
            verdict: Some(if vacuous { CaseVerdict::Vacuous } else { CaseVerdict::Finite }),
            lhs_tail_fraction: lhs.tail_fraction,
            rhs_tail_fraction: rhs.tail_fraction,
            notes: vec![format!("a = {a}; max |u_S| = {mean:.3e}")],
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitReport {
    pub radial: Report,
    pub mean_zero: Report,
    pub grad_norm: f64,
    pub grad_norm_symmetrized: f64,
    pub contraction_ok: bool,
}

pub const CONTRACTION_SLACK: f64 = 1e-6;

/// `‖∇u‖` and `‖∇u_S‖` in the case's weight, with `u_S` averaged on the grid's sphere rule.
pub fn contraction_norms(u: &ScalarField, s: f64, p: ExtendedExponent, scale: Scale, grid: &PolarGrid) -> Result<(f64, f64)> {
    let us = radial_symmetrize_with(u, &grid.sphere);
    let full = tensor_norm_detailed(&gradient_k(u, 1, grid)?, s, p, scale, Region::Full, grid)?.value;
    let sym = tensor_norm_detailed(&gradient_k(&us, 1, grid)?, s, p, scale, Region::Full, grid)?.value;
    Ok((full, sym))
}

/// Splits `u = u_S + (u − u_S)` for `k = 1` and verifies each part.
pub fn symmetrization_split(u: &ScalarField, case: &InequalityCase, grid: &PolarGrid) -> Result<SplitReport> {
    if case.k != 1 {
        return Err(Error::InvalidCase("symmetrization split needs k = 1".into()));
    }
    case.validate()?;
    check_grid(case, grid)?;
    let us = radial_symmetrize_with(u, &grid.sphere);
    let rest = u.sub(&us).with_label(format!("{} - sym", u.label()));
    let (grad_norm, grad_norm_symmetrized) = contraction_norms(u, case.s_f64(), case.p, case.scale, grid)?;
    let radial = verify_case(&us, case, grid)?;
    let mean_zero = verify_case(&rest, case, grid)?;
    Ok(SplitReport {
        radial,
        mean_zero,
        grad_norm,
        grad_norm_symmetrized,
        contraction_ok: grad_norm_symmetrized <= grad_norm * (1.0 + CONTRACTION_SLACK),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub report: Report,
}

/// Verifies the case for `u_λ(x) = u(λx)`, which equals the inequality for `u`
/// with `(λ + |x|)` in place of `(1 + |x|)`.
pub fn scaling_experiment(u: &ScalarField, case: &InequalityCase, lambdas: &[f64], grid: &PolarGrid) -> Result<Vec<ScalingReport>> {
    if case.scale == Scale::Exponential {
        return Err(Error::InvalidCase("dilation study needs a power scale".into()));
    }
    lambdas
        .par_iter()
        .map(|&lambda| {
            let ul = if lambda == 1.0 { u.clone() } else { u.dilate(lambda) };
            verify_case(&ul, case, grid).map(|report| ScalingReport { lambda, report })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub in_wkqp: bool,
    pub in_wkpp: bool,
    /// `‖u‖_{L^q_{s+k}} + ‖∇^k u‖_{L^p_s}`.
    pub norm_wkqp: f64,
    /// `Σ_{i=0}^{k} ‖∇^i u‖_{L^p_{s+k-i}}`.
    pub norm_wkpp: f64,
    pub seminorm: f64,
    /// `‖∇^{k-j} u‖_{L^p_{s+j}} / (‖u‖_{L^p_{s+k}} + ‖∇^k u‖_{L^p_s})` for `j = 1..k-1`.
    pub intermediate_ratios: Vec<(usize, f64)>,
    /// Max of the intermediate ratios (0 when `k = 1`).
    pub norm_ratio: f64,
    /// `norm_wkpp / seminorm`.
    pub full_to_seminorm: f64,
    pub pi_membership: bool,
}

pub fn embedding_report(
    u: &ScalarField,
    k: usize,
    s: Rational64,
    p: ExtendedExponent,
    q: ExtendedExponent,
    grid: &PolarGrid,
) -> Result<EmbeddingReport> {
    if regime_exact(s, k).component == RegimeComponent::Excluded {
        return Err(Error::ExcludedS { s: rational_to_f64(s), k });
    }
    if !p.is_finite() {
        return Err(Error::InadmissiblePq("p must be finite".into()));
    }
    let sf = rational_to_f64(s);
    let levels: Vec<f64> = (0..=k)
        .into_par_iter()
        .map(|i| {
            let t = gradient_k(u, i, grid)?;
            Ok(tensor_norm_detailed(&t, sf + (k - i) as f64, p, Scale::ShiftedPower, Region::Full, grid)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let u_q = tensor_norm_detailed(&gradient_k(u, 0, grid)?, sf + k as f64, q, Scale::ShiftedPower, Region::Full, grid)?.value;
    let seminorm = levels[k];
    let denom = levels[0] + seminorm;
    let intermediate_ratios: Vec<(usize, f64)> = (1..k).map(|j| (j, levels[k - j] / denom)).collect();
    let norm_ratio = intermediate_ratios.iter().map(|t| t.1).fold(0.0, f64::max);
    let norm_wkpp: f64 = levels.iter().sum();
    let pi = construct_pi_with(u, k, sf, p, &PiStrategy::Auto, grid, &PiOptions::default())?;
    Ok(EmbeddingReport {
        in_wkqp: u_q.is_finite() && seminorm.is_finite(),
        in_wkpp: levels[0].is_finite() && seminorm.is_finite(),
        norm_wkqp: u_q + seminorm,
        norm_wkpp,
        seminorm,
        intermediate_ratios,
        norm_ratio,
        full_to_seminorm: norm_wkpp / seminorm,
        pi_membership: poly_membership(&pi, sf, k, q),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub s: f64,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

/// Ratios at `s = c ∓ δ` around an excluded value `c`, returned as
/// `(below, above)`, each ordered by decreasing `δ`.
pub fn blow_up_scan(
    u: &ScalarField,
    case: &InequalityCase,
    center: i64,
    deltas: &[f64],
    grid: &PolarGrid,
) -> Result<(Vec<ScanPoint>, Vec<ScanPoint>)> {
    let run = |s: f64| -> Result<ScanPoint> {
        let c = case.clone().with_s(rational_from_f64(s)?);
        Ok(match verify_case(u, &c, grid) {
            Ok(r) => ScanPoint { s, ratio: r.ratio, error: None },
            Err(e) => ScanPoint { s, ratio: None, error: Some(e.to_string()) },
        })
    };
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let c = center as f64;
    let below = ds.par_iter().map(|d| run(c - d)).collect::<Result<Vec<_>>>()?;
    let above = ds.par_iter().map(|d| run(c + d)).collect::<Result<Vec<_>>>()?;
    Ok((below, above))
}

pub const DEFAULT_FAMILY_SIZE: usize = 20;

/// Seeded random radial splines with constant tails.
pub fn default_family(dim: usize, seed: u64) -> Vec<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..DEFAULT_FAMILY_SIZE)
        .map(|i| random_radial_spline(&mut rng, dim, format!("spline_{i:02}")))
        .collect()
}
