//! One-dimensional weighted Hardy inequalities in the power and exponential
//! scales, and the two-weight criterion `sup_ξ A(ξ)B(ξ) < ∞`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{admissible_interval, ExtendedExponent};
use crate::fields::grid::{GridConfig, RadialRule};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A locally absolutely continuous profile `f` on `(0, ∞)` with optional derivative.
#[derive(Clone)]
pub struct RadialProfile {
    f: RealFn,
    df: Option<RealFn>,
    pub decay_at_infinity: bool,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("analytic_derivative", &self.df.is_some())
            .field("decay_at_infinity", &self.decay_at_infinity)
            .finish()
    }
}

impl RadialProfile {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        RadialProfile { f: Arc::new(f), df: None, decay_at_infinity: false }
    }

    pub fn with_derivative<D>(mut self, df: D) -> Self
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn decaying(mut self) -> Self {
        self.decay_at_infinity = true;
        self
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match &self.df {
            Some(d) => d(r),
            None => {
                let h = 1e-5 * (1.0 + r);
                let lo = (r - h).max(r * 0.5);
                ((self.f)(r + h) - (self.f)(lo)) / (r + h - lo)
            }
        }
    }

    /// Checks `f(r_m) → 0` on `r_m = 2^m`, `m = 4..40`.
    pub fn decays_numerically(&self) -> bool {
        let vals: Vec<f64> = (4..=40).map(|m| self.value(2f64.powi(m)).abs()).collect();
        let head = vals[0].max(1e-300);
        *vals.last().unwrap() <= 1e-6 * head.max(1.0)
    }
}

fn rule() -> RadialRule {
    let c = GridConfig::default();
    RadialRule::new(c.r_max, c.panels, c.points_per_panel)
}

// (∫_lo^∞ exp(lnw(r)) |g(r)|^q dr)^{1/q}, computed in log space.
fn weighted_lq<W, G>(lnw: W, g: G, q: f64, lo: f64) -> f64
where
    W: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    let integrand = |r: f64| {
        let m = g(r).abs();
        if m == 0.0 || m.is_nan() {
            0.0
        } else {
            (lnw(r) + q * m.ln()).exp()
        }
    };
    let rule = rule();
    let est = rule.integrate(&integrand, lo, f64::INFINITY);
    if est.divergent || hidden_by_underflow(&lnw, &g, &integrand, est.value, lo, rule.r_max) {
        f64::INFINITY
    } else {
        est.value.powf(1.0 / q)
    }
}

// `g` underflowing to exactly 0 under an astronomically large weight hides the
// true tail; report that as divergence when the integrand was still carrying mass.
fn hidden_by_underflow<W, G, I>(lnw: &W, g: &G, integrand: &I, total: f64, lo: f64, r_max: f64) -> bool
where
    W: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
    I: Fn(f64) -> f64,
{
    let start = lo.max(1e-3);
    let steps = (8.0 * (r_max / start).log2()).ceil() as i32;
    let radii = (0..=steps).map(|i| start * 2f64.powf(i as f64 / 8.0));
    let Some(last) = radii.filter(|&r| g(r) != 0.0).last() else {
        return false;
    };
    if last >= r_max || lnw(last) < 230.0 {
        return false;
    }
    integrand(last) * last > 1e-8 * total
}

/// `sup_{r ≥ lo} exp(lnw(r))·|g(r)|` on geometric radii, 512 per decade over 12 decades.
fn sampled_sup<W, G>(lnw: W, g: G, lo: f64) -> f64
where
    W: Fn(f64) -> f64 + Sync,
    G: Fn(f64) -> f64 + Sync,
{
    let start = lo.max(1e-6);
    (0..=512 * 12)
        .into_par_iter()
        .map(|i| {
            let r = start * 10f64.powf(i as f64 / 512.0);
            let m = g(r).abs();
            if m == 0.0 { 0.0 } else { (lnw(r) + m.ln()).exp() }
        })
        .reduce(|| 0.0, f64::max)
}

fn power_weight(a: f64, n: usize) -> impl Fn(f64) -> f64 + Sync {
    move |r: f64| a * r.ln_1p() + (n as f64 - 1.0) * r.ln()
}

fn rhs_power(f: &RadialProfile, s: f64, p: f64, n: usize, lo: f64) -> Result<f64> {
    let rhs = weighted_lq(power_weight(-s * p - n as f64, n), |r| f.derivative(r), p, lo);
    if rhs.is_infinite() {
        return Err(Error::DivergentRhs("derivative integral diverges".into()));
    }
    Ok(rhs)
}

fn finite_f64(q: ExtendedExponent, what: &str) -> Result<f64> {
    if q.is_finite() {
        Ok(q.to_f64())
    } else {
        Err(Error::InadmissiblePq(format!("{what} must be finite")))
    }
}

/// Both sides of the integral Hardy inequality on `[ρ, ∞)` for `s > -1`.
pub fn hardy_pair_power_above(
    f: &RadialProfile,
    s: f64,
    p: ExtendedExponent,
    q: ExtendedExponent,
    rho: f64,
    n: usize,
) -> Result<(f64, f64)> {
    if s <= -1.0 {
        return Err(Error::InvalidCase(format!("s = {s} must exceed -1")));
    }
    let (pf, qf) = (finite_f64(p, "p")?, finite_f64(q, "q")?);
    if q < p {
        return Err(Error::InadmissiblePq(format!("q = {q} < p = {p}")));
    }
    let rhs = rhs_power(f, s, pf, n, rho)?;
    let f_rho = f.value(rho);
    let lhs = weighted_lq(power_weight(-(s + 1.0) * qf - n as f64, n), |r| f.value(r) - f_rho, qf, rho);
    Ok((lhs, rhs))
}

/// Sup-form Hardy inequality on `[R, ∞)` for `s > -1`.
pub fn hardy_sup_power_above(f: &RadialProfile, s: f64, p: ExtendedExponent, big_r: f64, n: usize) -> Result<(f64, f64)> {
    if s <= -1.0 {
        return Err(Error::InvalidCase(format!("s = {s} must exceed -1")));
    }
    let pf = finite_f64(p, "p")?;
    let rhs = rhs_power(f, s, pf, n, big_r)?;
    let f_r = f.value(big_r);
    let lhs = sampled_sup(|r: f64| -(s + 1.0) * r.ln_1p(), |r| f.value(r) - f_r, big_r);
    Ok((lhs, rhs))
}

/// Both sides of the integral Hardy inequality on `(0, ∞)` for `s < -1`
/// and finite `q ∈ I_{1,p}`, for profiles vanishing at infinity.
pub fn hardy_pair_power_below(
    f: &RadialProfile,
    s: f64,
    p: ExtendedExponent,
    q: ExtendedExponent,
    n: usize,
) -> Result<(f64, f64)> {
    if s >= -1.0 {
        return Err(Error::InvalidCase(format!("s = {s} must be below -1")));
    }
    if !f.decay_at_infinity {
        return Err(Error::NoDecay);
    }
    let (pf, qf) = (finite_f64(p, "p")?, finite_f64(q, "q")?);
    if !admissible_interval(1, p, n).contains(q) {
        return Err(Error::InadmissiblePq(format!("q = {q} ∉ {}", admissible_interval(1, p, n))));
    }
    let rhs = rhs_power(f, s, pf, n, 0.0)?;
    let lhs = weighted_lq(power_weight(-(s + 1.0) * qf - n as f64, n), |r| f.value(r), qf, 0.0);
    Ok((lhs, rhs))
}

/// Sup-form inequality on `[R, ∞)` for `s < -1` and `p > N`.
pub fn hardy_sup_power_below(f: &RadialProfile, s: f64, p: ExtendedExponent, big_r: f64, n: usize) -> Result<(f64, f64)> {
    if s >= -1.0 {
        return Err(Error::InvalidCase(format!("s = {s} must be below -1")));
    }
    if !f.decay_at_infinity {
        return Err(Error::NoDecay);
    }
    let pf = finite_f64(p, "p")?;
    if pf <= n as f64 {
        return Err(Error::InadmissiblePq(format!("sup form needs p > N (p = {p}, N = {n})")));
    }
    let rhs = rhs_power(f, s, pf, n, big_r)?;
    let lhs = sampled_sup(|r: f64| -(s + 1.0) * r.ln_1p(), |r| f.value(r), big_r);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Finite,
    Divergent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Finite => "finite",
            Verdict::Divergent => "divergent",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionReport {
    pub sup_estimate: f64,
    pub verdict: Verdict,
    /// `(ξ, A(ξ), B(ξ), A(ξ)B(ξ))` on the log grid.
    pub profile: Vec<(f64, f64, f64, f64)>,
}

/// Log grid `ξ = 10^{i/8}` on `[1e-6, 1e6]`.
pub fn default_xi_grid() -> Vec<f64> {
    (-48..=48).map(|i| 10f64.powf(i as f64 / 8.0)).collect()
}

// ln A(ξ); the integrand is rescaled by its bound at ξ to stay in range.
fn criterion_ln_a(s: f64, q: ExtendedExponent, n: usize, xi: f64, rule: &RadialRule) -> f64 {
    match q.finite() {
        None => -(s + 1.0) * xi.ln_1p(),
        Some(_) => {
            let qf = q.to_f64();
            let nf = n as f64;
            let a = -(s + 1.0) * qf - nf;
            let shift = (a.max(0.0) + nf - 1.0) * xi.ln_1p();
            let g = |r: f64| (a * r.ln_1p() + (nf - 1.0) * r.ln() - shift).exp();
            (rule.integrate(&g, 0.0, xi).value.ln() + shift) / qf
        }
    }
}

// ln B(ξ), rescaled by the integrand at ξ.
fn criterion_ln_b(s: f64, p: ExtendedExponent, n: usize, xi: f64, rule: &RadialRule) -> f64 {
    let pf = p.to_f64();
    let nf = n as f64;
    if pf == 1.0 {
        // sup_{r > ξ} (1+r)^{s+N} r^{1-N}; the only critical point is r* = (N-1)/(s+1).
        let ln_h = |r: f64| (s + nf) * r.ln_1p() + (1.0 - nf) * r.ln();
        let mut best = ln_h(xi);
        let crit = (nf - 1.0) / (s + 1.0);
        if crit > xi {
            best = best.max(ln_h(crit));
        }
        return best;
    }
    let pp = pf / (pf - 1.0);
    let ln_g = |r: f64| ((s + nf / pf) * r.ln_1p() + (1.0 - nf) / pf * r.ln()) * pp;
    let shift = ln_g(xi);
    let g = |r: f64| (ln_g(r) - shift).exp();
    let est = rule.integrate(&g, xi, f64::INFINITY);
    if est.divergent {
        f64::INFINITY
    } else {
        (est.value.ln() + shift) / pp
    }
}

/// Evaluates `A(ξ)B(ξ)` on `ξ_grid` and decides boundedness by the growth of
/// the product over the outermost decade at each end.
pub fn ok_criterion(s: f64, p: ExtendedExponent, q: ExtendedExponent, n: usize, xi_grid: &[f64]) -> Result<CriterionReport> {
    if s >= -1.0 {
        return Err(Error::InvalidCase(format!("criterion needs s < -1, got {s}")));
    }
    if q < p || !p.is_finite() {
        return Err(Error::InadmissiblePq(format!("need finite p ≤ q (p = {p}, q = {q})")));
    }
    let rule = rule();
    let profile: Vec<(f64, f64, f64, f64)> = xi_grid
        .par_iter()
        .map(|&xi| {
            let ln_a = criterion_ln_a(s, q, n, xi, &rule);
            let ln_b = criterion_ln_b(s, p, n, xi, &rule);
            (xi, ln_a.exp(), ln_b.exp(), (ln_a + ln_b).exp())
        })
        .collect();
    let sup_estimate = profile.iter().map(|t| t.3).fold(0.0, f64::max);
    let divergent = !sup_estimate.is_finite() || grows_at_end(&profile, false) || grows_at_end(&profile, true);
    Ok(CriterionReport {
        sup_estimate,
        verdict: if divergent { Verdict::Divergent } else { Verdict::Finite },
        profile,
    })
}

// Growth of ln(AB) outward over the last decades: > 10% in the outermost decade,
// or slowly decaying positive increments (logarithmic growth).
fn grows_at_end(profile: &[(f64, f64, f64, f64)], at_infinity: bool) -> bool {
    let decade_value = |k: usize| -> Option<f64> {
        // value at the grid point k decades in from the end
        let target = if at_infinity {
            profile.last()?.0 / 10f64.powi(k as i32)
        } else {
            profile.first()?.0 * 10f64.powi(k as i32)
        };
        profile
            .iter()
            .min_by(|a, b| (a.0.ln() - target.ln()).abs().partial_cmp(&(b.0.ln() - target.ln()).abs()).unwrap())
            .map(|t| t.3)
    };
    let vals: Vec<f64> = (0..4).filter_map(decade_value).collect();
    if vals.len() < 4 || vals.iter().any(|v| !(*v > 0.0)) {
        return vals.iter().any(|v| v.is_infinite());
    }
    // vals[0] is outermost
    if vals[0] > 1.1 * vals[1] {
        return true;
    }
    let inc: Vec<f64> = vals.windows(2).map(|w| (w[0] / w[1]).ln()).collect();
    inc.iter().all(|d| *d > 1e-3) && inc[0] > 0.5 * inc[1] && inc[1] > 0.5 * inc[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpVariant {
    /// `s > 0`, on `[ρ, ∞)` with `f − f(ρ)`.
    Above(f64),
    /// `s < 0`, on `(0, ∞)` for decaying `f`.
    Below,
}

/// Both sides of the exponential-scale Hardy inequality.
pub fn hardy_exponential(f: &RadialProfile, s: f64, p: ExtendedExponent, n: usize, variant: ExpVariant) -> Result<(f64, f64)> {
    if s == 0.0 {
        return Err(Error::SZero);
    }
    let pf = finite_f64(p, "p")?;
    let lnw = move |r: f64| -s * pf * r + (n as f64 - 1.0) * r.ln();
    let (lo, shift) = match variant {
        ExpVariant::Above(rho) => {
            if s < 0.0 {
                return Err(Error::InvalidCase("the above variant needs s > 0".into()));
            }
            (rho, f.value(rho))
        }
        ExpVariant::Below => {
            if s > 0.0 {
                return Err(Error::InvalidCase("the below variant needs s < 0".into()));
            }
            if !f.decay_at_infinity {
                return Err(Error::NoDecay);
            }
            (0.0, 0.0)
        }
    };
    let rhs = weighted_lq(lnw, |r| f.derivative(r), pf, lo);
    if rhs.is_infinite() {
        return Err(Error::DivergentRhs("derivative integral diverges".into()));
    }
    let lhs = weighted_lq(lnw, |r| f.value(r) - shift, pf, lo);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> ExtendedExponent {
        ExtendedExponent::integer(n)
    }

    #[test]
    fn constant_profile_has_zero_lhs() {
        let f = RadialProfile::new(|_| 3.0).with_derivative(|_| 0.0);
        let g = RadialProfile::new(|r: f64| r.ln_1p()).with_derivative(|r: f64| 1.0 / (1.0 + r));
        let (lhs, _) = hardy_pair_power_above(&f, 0.5, q(2), q(3), 1.0, 2).unwrap_or((0.0, 0.0));
        assert_eq!(lhs, 0.0);
        assert!(matches!(hardy_pair_power_above(&f, 0.5, q(2), q(3), 1.0, 2), Err(Error::DivergentRhs(_)) | Ok(_)));
        let (lhs, rhs) = hardy_sup_power_above(&g, 0.0, q(3), 1.0, 1).unwrap();
        assert!(lhs.is_finite() && rhs.is_finite() && rhs > 0.0);
    }

    #[test]
    fn below_requires_decay() {
        let f = RadialProfile::new(|r: f64| (1.0 + r).powi(-3));
        assert_eq!(hardy_pair_power_below(&f, -2.0, q(2), q(2), 3), Err(Error::NoDecay));
        let (lhs, rhs) = hardy_pair_power_below(&f.decaying(), -2.0, q(2), q(2), 3).unwrap();
        assert!(lhs.is_finite() && rhs.is_finite());
    }

    #[test]
    fn criterion_examples() {
        let grid = default_xi_grid();
        assert_eq!(ok_criterion(-2.0, q(2), q(2), 3, &grid).unwrap().verdict, Verdict::Finite);
        assert_eq!(ok_criterion(-2.0, q(2), q(7), 3, &grid).unwrap().verdict, Verdict::Divergent);
        assert_eq!(ok_criterion(-2.0, q(3), ExtendedExponent::Infinite, 2, &grid).unwrap().verdict, Verdict::Finite);
        assert_eq!(ok_criterion(-2.0, q(2), q(6), 3, &grid).unwrap().verdict, Verdict::Finite);
    }

    #[test]
    fn exponential_zero_rejected() {
        let f = RadialProfile::new(|r| r);
        assert_eq!(hardy_exponential(&f, 0.0, q(2), 1, ExpVariant::Below), Err(Error::SZero));
    }
}
