//! The canonical polynomial `π_u ∈ P_{k-1}`: unique high-degree part from
//! spherical-mean limits at infinity, low-degree part from ball averages or
//! Taylor coefficients, built one homogeneous layer at a time.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{regime, ExtendedExponent, RegimeComponent};
use crate::fields::families::Polynomial;
use crate::fields::grid::gauss_legendre;
use crate::fields::{spherical_mean_partial, Domain, FieldFlags, PolarGrid, ScalarField, SphereRule};
use crate::jet::{multi_indices, MultiIndex};

/// How a coefficient was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Provenance {
    LimitAtInfinity,
    BallAverage { center: Vec<f64>, radius: f64 },
    TaylorPoint { point: Vec<f64> },
    Zero,
}

/// `Σ_{|α| ≤ k-1} c_α x^α`, where `c_α` already includes the `1/α!` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexPolynomial {
    pub dim: usize,
    pub k: usize,
    coeffs: BTreeMap<MultiIndex, (f64, Provenance)>,
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    alpha: MultiIndex,
    value: f64,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyJson {
    #[serde(rename = "N")]
    n: usize,
    k: usize,
    coeffs: Vec<CoeffJson>,
}

impl Serialize for MultiIndexPolynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let coeffs = self
            .sorted_terms()
            .into_iter()
            .map(|(alpha, value, provenance)| CoeffJson { alpha, value, provenance })
            .collect();
        PolyJson { n: self.dim, k: self.k, coeffs }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MultiIndexPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PolyJson::deserialize(deserializer)?;
        let mut p = MultiIndexPolynomial::zero(raw.n, raw.k);
        for c in raw.coeffs {
            if c.alpha.dim() != raw.n || c.alpha.order() >= raw.k.max(1) {
                return Err(serde::de::Error::custom(format!("multi-index {} out of range", c.alpha)));
            }
            p.set(c.alpha, c.value, c.provenance);
        }
        Ok(p)
    }
}

impl MultiIndexPolynomial {
    pub fn zero(dim: usize, k: usize) -> Self {
        MultiIndexPolynomial { dim, k, coeffs: BTreeMap::new() }
    }

    pub fn set(&mut self, alpha: MultiIndex, value: f64, provenance: Provenance) {
        self.coeffs.insert(alpha, (value, provenance));
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.coeffs.get(alpha).map_or(0.0, |c| c.0)
    }

    pub fn provenance(&self, alpha: &MultiIndex) -> Option<&Provenance> {
        self.coeffs.get(alpha).map(|c| &c.1)
    }

    /// Terms ordered by degree, then lexicographically descending within a degree.
    pub fn sorted_terms(&self) -> Vec<(MultiIndex, f64, Provenance)> {
        let mut v: Vec<_> = self.coeffs.iter().map(|(a, (c, p))| (a.clone(), *c, p.clone())).collect();
        v.sort_by(|a, b| a.0.order().cmp(&b.0.order()).then(b.0.cmp(&a.0)));
        v
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(a, (c, _))| c * a.monomial(x)).sum()
    }

    /// Largest `|α|` with `|c_α| > tol`; `None` for the zero polynomial.
    pub fn degree_with_tol(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().filter(|(_, (c, _))| c.abs() > tol).map(|(a, _)| a.order()).max()
    }

    pub fn degree(&self) -> Option<usize> {
        self.degree_with_tol(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().map(|(c, _)| c.abs()).fold(0.0, f64::max)
    }

    /// `∂^β` of the polynomial.
    pub fn derivative(&self, beta: &MultiIndex) -> MultiIndexPolynomial {
        let mut out = MultiIndexPolynomial::zero(self.dim, self.k);
        for (a, (c, p)) in &self.coeffs {
            if let Some(rest) = a.checked_sub(beta) {
                let falling: f64 = a
                    .0
                    .iter()
                    .zip(&beta.0)
                    .map(|(&ai, &bi)| (0..bi).map(|t| (ai - t) as f64).product::<f64>())
                    .product();
                let prev = out.coeff(&rest);
                out.set(rest, prev + c * falling, p.clone());
            }
        }
        out
    }

    pub fn to_field(&self) -> ScalarField {
        let terms: Vec<(MultiIndex, f64)> = self.coeffs.iter().map(|(a, (c, _))| (a.clone(), *c)).collect();
        let constant_only = terms.iter().all(|(a, _)| a.order() == 0);
        let flags = FieldFlags { radial: constant_only, ..Default::default() };
        ScalarField::from_family(self.dim, Polynomial { terms }, flags, "π")
    }
}

/// Rule for the degrees below `k_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PiStrategy {
    /// Ball averages over `B(0, 1)`.
    #[default]
    Auto,
    BallAverages { center: Vec<f64>, radius: f64 },
    Taylor { point: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct PiOptions {
    /// Base radius of the limit extrapolation.
    pub r0: f64,
    /// Exponential scale: unique part is everything when `s < 0`, nothing when `s > 0`.
    pub exponential: bool,
    /// Layers below this degree are left at zero (partial construction).
    pub min_degree: usize,
    pub ball_radial_points: usize,
}

impl Default for PiOptions {
    fn default() -> Self {
        PiOptions { r0: 8.0, exponential: false, min_degree: 0, ball_radial_points: 24 }
    }
}

/// `(α!)^{-1} |B_ρ|^{-1} ∫_{B(x₀,ρ)} ∂^α u`.
pub fn ball_average_coeff(
    u: &ScalarField,
    alpha: &MultiIndex,
    center: &[f64],
    radius: f64,
    sphere: &SphereRule,
    radial_points: usize,
) -> Result<f64> {
    let n = u.dim();
    let gl = gauss_legendre(radial_points);
    let centered = center.iter().all(|c| *c == 0.0);
    let dirs: &[Vec<f64>] = if centered && alpha.order() == 0 && u.is_radial() { &sphere.nodes[..1] } else { &sphere.nodes };
    let dir_weights: &[f64] = &sphere.weights[..dirs.len()];
    let parts: Vec<Result<(f64, f64)>> = gl
        .par_iter()
        .map(|&(t, wt)| {
            let r = 0.5 * radius * (t + 1.0);
            let wr = 0.5 * radius * wt * r.powi(n as i32 - 1);
            let mut x = vec![0.0; n];
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (s, ws) in dirs.iter().zip(dir_weights) {
                for ((xi, si), ci) in x.iter_mut().zip(s).zip(center) {
                    *xi = ci + r * si;
                }
                acc += wr * ws * u.partial(&x, alpha)?;
                wsum += wr * ws;
            }
            Ok((acc, wsum))
        })
        .collect();
    let (mut acc, mut wsum) = (0.0, 0.0);
    for p in parts {
        let (a, w) = p?;
        acc += a;
        wsum += w;
    }
    Ok(acc / wsum / alpha.factorial())
}

/// `(α!)^{-1} ∂^α u(x₀)`.
pub fn taylor_coeff(u: &ScalarField, alpha: &MultiIndex, point: &[f64]) -> Result<f64> {
    Ok(u.partial(point, alpha)? / alpha.factorial())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub value: f64,
    /// `|mean(r_m) - value|` at the largest radius.
    pub residual: f64,
    /// Change of the estimate when the last elimination step is dropped.
    pub uncertainty: f64,
}

/// Richardson exponents: the five slowest of `{e, e-1, …} ∪ {-1, -2, …}`.
pub fn richardson_ladder(e: f64) -> Vec<f64> {
    let mut cands: Vec<f64> = (0..6).map(|i| e - i as f64).chain((1..=6).map(|i| -(i as f64))).collect();
    cands.retain(|g| *g < 0.0);
    cands.sort_by(|a, b| b.partial_cmp(a).unwrap());
    cands.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    cands.truncate(5);
    cands
}

/// `(α!)^{-1} lim_{r→∞}` of the spherical means of `∂^α u`, extrapolated
/// from radii `r₀·2^m`, `m = 0..5`, assuming residuals decay like `r^e`.
///
/// A sequence that is constant to rounding returns its last term; an estimate
/// within its own uncertainty of zero returns exactly zero.
pub fn limit_coeff(u: &ScalarField, alpha: &MultiIndex, sphere: &SphereRule, r0: f64, e: f64) -> Result<LimitFit> {
    let radii: Vec<f64> = (0..6).map(|m| r0 * 2f64.powi(m)).collect();
    let means = radii
        .par_iter()
        .map(|&r| spherical_mean_partial(u, alpha, r, sphere))
        .collect::<Result<Vec<f64>>>()?;
    let af = alpha.factorial();
    let means: Vec<f64> = means.into_iter().map(|m| m / af).collect();
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::NoConvergence(format!("non-finite spherical mean of ∂^{alpha}")));
    }
    let scale = means.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let rounding = 64.0 * f64::EPSILON * scale;
    let last = means[5];
    if means[3..].iter().all(|m| (m - last).abs() <= rounding) {
        return Ok(LimitFit { value: last, residual: 0.0, uncertainty: 0.0 });
    }
    let mut table = means.clone();
    let mut previous = last;
    for g in richardson_ladder(e) {
        previous = *table.last().unwrap();
        let f = 2f64.powf(g);
        table = table.windows(2).map(|w| (w[1] - f * w[0]) / (1.0 - f)).collect();
    }
    let mut value = table[0];
    let uncertainty = (value - previous).abs().max(rounding);
    let floor = 1e-12 * value.abs().max(1.0);
    let dev: Vec<f64> = means[3..].iter().map(|m| (m - value).abs()).collect();
    if dev.windows(2).any(|w| w[1] > w[0] && w[1] > floor) {
        return Err(Error::NoConvergence(format!(
            "residuals of ∂^{alpha} spherical means {dev:?} do not decrease"
        )));
    }
    if value.abs() <= uncertainty {
        value = 0.0;
    }
    Ok(LimitFit { value, residual: dev[2], uncertainty })
}

/// Builds `π_u` for order `k`, growth `s` and Lebesgue exponent `p`.
pub fn construct_pi(
    u: &ScalarField,
    k: usize,
    s: f64,
    p: ExtendedExponent,
    strategy: &PiStrategy,
    grid: &PolarGrid,
) -> Result<MultiIndexPolynomial> {
    construct_pi_with(u, k, s, p, strategy, grid, &PiOptions::default())
}

pub fn construct_pi_with(
    u: &ScalarField,
    k: usize,
    s: f64,
    p: ExtendedExponent,
    strategy: &PiStrategy,
    grid: &PolarGrid,
    opts: &PiOptions,
) -> Result<MultiIndexPolynomial> {
    let n = u.dim();
    let full_line = n == 1 && u.domain == Domain::FullSpace;
    let k_s = if opts.exponential {
        if s == 0.0 {
            return Err(Error::SZero);
        }
        if s < 0.0 && full_line {
            return Err(Error::DimensionOne(s));
        }
        if s < 0.0 { 0 } else { k }
    } else {
        let info = regime(s, k);
        if info.component == RegimeComponent::Excluded {
            return Err(Error::ExcludedS { s, k });
        }
        if s < -1.0 && full_line {
            return Err(Error::DimensionOne(s));
        }
        info.k_s
    };
    if let PiStrategy::Taylor { .. } = strategy {
        if k_s > opts.min_degree && !(p.to_f64() > n as f64) {
            return Err(Error::TaylorInadmissible { p: p.to_f64(), n });
        }
    }
    let mut pi = MultiIndexPolynomial::zero(n, k);
    for d in (opts.min_degree..k).rev() {
        let v = if pi.max_abs_coeff() > 0.0 { u.difference(&pi.to_field()) } else { u.clone() };
        let layer: Vec<(MultiIndex, f64, Provenance)> = multi_indices(n, d)
            .into_iter()
            .map(|alpha| {
                let (value, prov) = if d >= k_s {
                    let e = if opts.exponential { -1.0 } else { s + (k - d) as f64 };
                    (limit_coeff(&v, &alpha, &grid.sphere, opts.r0, e)?.value, Provenance::LimitAtInfinity)
                } else {
                    match strategy {
                        PiStrategy::Auto => {
                            let c = vec![0.0; n];
                            let val = ball_average_coeff(&v, &alpha, &c, 1.0, &grid.sphere, opts.ball_radial_points)?;
                            (val, Provenance::BallAverage { center: c, radius: 1.0 })
                        }
                        PiStrategy::BallAverages { center, radius } => {
                            let val = ball_average_coeff(&v, &alpha, center, *radius, &grid.sphere, opts.ball_radial_points)?;
                            (val, Provenance::BallAverage { center: center.clone(), radius: *radius })
                        }
                        PiStrategy::Taylor { point } => {
                            (taylor_coeff(&v, &alpha, point)?, Provenance::TaylorPoint { point: point.clone() })
                        }
                    }
                };
                Ok((alpha, value, prov))
            })
            .collect::<Result<Vec<_>>>()?;
        for (alpha, value, prov) in layer {
            pi.set(alpha, value, prov);
        }
    }
    for d in 0..opts.min_degree.min(k) {
        for alpha in multi_indices(n, d) {
            pi.set(alpha, 0.0, Provenance::Zero);
        }
    }
    Ok(pi)
}

/// Coefficients below this are treated as zero by [`poly_membership`].
pub const POLY_ZERO_TOL: f64 = 1e-8;

/// `π ∈ L^q_{s+k}` iff `π = 0` or `deg π < s + k`.
pub fn poly_membership(pi: &MultiIndexPolynomial, s: f64, k: usize, _q: ExtendedExponent) -> bool {
    match pi.degree_with_tol(POLY_ZERO_TOL) {
        None => true,
        Some(d) => (d as f64) < s + k as f64,
    }
}
