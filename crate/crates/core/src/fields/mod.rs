//! Scalar fields on `R^N`: evaluation, derivatives (jets or finite
//! differences), spherical means, radial symmetrization and mollification.

pub mod families;
pub mod grid;
pub mod tensor;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExtendedExponent;
use crate::jet::{factorial, Jet, MultiIndex, Scalar};
use crate::wnorms::{self, Region, Weight};

pub use families::{builtin, parse_field, random_angular_field, random_radial_spline, Family};
pub use grid::{CompensatedSum, GridConfig, PolarGrid, SphereRule};
pub use tensor::{gradient_k, SymTensor, TensorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[default]
    FullSpace,
    HalfLinePos,
    HalfLineNeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldFlags {
    pub radial: bool,
    pub compact_support: Option<f64>,
    pub vanishes_near_origin: Option<f64>,
}

impl FieldFlags {
    pub fn radial() -> Self {
        FieldFlags { radial: true, ..Default::default() }
    }
}

/// Pointwise evaluator. `jet` returns `None` when no analytic derivatives exist,
/// in which case callers fall back to finite differences.
pub trait FieldFn: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn jet(&self, _x: &[Jet]) -> Option<Jet> {
        None
    }
}

struct Analytic<F>(F);

impl<F: Family> FieldFn for Analytic<F> {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.eval(x)
    }
    fn jet(&self, x: &[Jet]) -> Option<Jet> {
        Some(self.0.eval(x))
    }
}

struct Closure<F>(F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FieldFn for Closure<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    inner: Arc<dyn FieldFn>,
    pub flags: FieldFlags,
    pub domain: Domain,
    label: String,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("flags", &self.flags)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Finite-difference base step for a derivative of total order `k`.
pub fn fd_step(k: usize) -> f64 {
    match k {
        0 | 1 => 1e-4,
        2 => 2e-4,
        _ => 5e-3,
    }
}

// (offset, coefficient) pairs; the result is divided by h^order.
fn stencil(order: u32) -> &'static [(f64, f64)] {
    match order {
        0 => &[(0.0, 1.0)],
        1 => &[(1.0, 0.5), (-1.0, -0.5)],
        2 => &[(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)],
        3 => &[(2.0, 0.5), (1.0, -1.0), (-1.0, 1.0), (-2.0, -0.5)],
        _ => &[(2.0, 1.0), (1.0, -4.0), (0.0, 6.0), (-1.0, -4.0), (-2.0, 1.0)],
    }
}

/// Tensor-product central difference for `∂^α f(x)` with step `h`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &MultiIndex, h: f64) -> Result<f64> {
    let order = alpha.order();
    if order > 4 {
        return Err(Error::OrderTooHigh(order));
    }
    let axes: Vec<(usize, &[(f64, f64)])> = alpha
        .0
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(i, &a)| (i, stencil(a)))
        .collect();
    let mut acc = 0.0;
    let mut point = x.to_vec();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let mut coeff = 1.0;
        point.copy_from_slice(x);
        for (slot, &(axis, st)) in idx.iter().zip(&axes) {
            let (off, c) = st[*slot];
            point[axis] += off * h;
            coeff *= c;
        }
        acc += coeff * f(&point);
        // odometer over stencil slots
        let mut d = 0;
        loop {
            if d == axes.len() {
                return Ok(acc / h.powi(order as i32));
            }
            idx[d] += 1;
            if idx[d] < axes[d].1.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

impl ScalarField {
    pub fn new(dim: usize, inner: Arc<dyn FieldFn>, flags: FieldFlags, label: impl Into<String>) -> Self {
        ScalarField { dim, inner, flags, domain: Domain::FullSpace, label: label.into() }
    }

    pub fn from_family<F: Family>(dim: usize, family: F, flags: FieldFlags, label: impl Into<String>) -> Self {
        ScalarField::new(dim, Arc::new(Analytic(family)), flags, label)
    }

    /// A field without derivative oracle; derivatives use finite differences.
    pub fn from_fn<F>(dim: usize, f: F, flags: FieldFlags, label: impl Into<String>) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarField::new(dim, Arc::new(Closure(f)), flags, label)
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let flags = FieldFlags { radial: true, ..Default::default() };
        ScalarField::from_family(dim, families::Constant { c }, flags, format!("constant({c})"))
    }

    pub fn zero(dim: usize) -> Self {
        let flags = FieldFlags { radial: true, compact_support: Some(0.0), vanishes_near_origin: None };
        ScalarField::from_family(dim, families::Constant { c: 0.0 }, flags, "0")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn is_radial(&self) -> bool {
        self.flags.radial
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.inner.value(x)
    }

    pub fn jet(&self, x: &[Jet]) -> Option<Jet> {
        self.inner.jet(x)
    }

    /// Whether an analytic derivative oracle is available.
    pub fn has_oracle(&self) -> bool {
        let probe = vec![0.31; self.dim];
        self.inner.jet(&Jet::seed(&probe, 1)).is_some()
    }

    /// `∂^α u(x)`: jets when available, otherwise central differences with
    /// step `h₀(|α|)·(1+|x|)`.
    pub fn partial(&self, x: &[f64], alpha: &MultiIndex) -> Result<f64> {
        let order = alpha.order();
        if order == 0 {
            return Ok(self.value(x));
        }
        if let Some(j) = self.inner.jet(&Jet::seed(x, order)) {
            return Ok(j.derivative(alpha));
        }
        self.partial_fd(x, alpha, fd_step(order))
    }

    /// Finite-difference `∂^α u(x)` with base step `h0`.
    pub fn partial_fd(&self, x: &[f64], alpha: &MultiIndex, h0: f64) -> Result<f64> {
        let h = h0 * (1.0 + norm(x));
        central_difference(&|y| self.value(y), x, alpha, h)
    }

    /// Same field composed with `x ↦ λx`.
    pub fn dilate(&self, lambda: f64) -> ScalarField {
        let flags = FieldFlags {
            radial: self.flags.radial,
            compact_support: self.flags.compact_support.map(|r| r / lambda),
            vanishes_near_origin: self.flags.vanishes_near_origin.map(|r| r / lambda),
        };
        ScalarField {
            dim: self.dim,
            inner: Arc::new(Dilate { lambda, inner: self.clone() }),
            flags,
            domain: self.domain,
            label: format!("{}(λ={lambda})", self.label),
        }
    }

    /// `Σ cᵢ uᵢ`.
    pub fn linear_combination(terms: &[(f64, ScalarField)]) -> ScalarField {
        assert!(!terms.is_empty(), "empty combination");
        let dim = terms[0].1.dim;
        let all_compact = terms.iter().all(|(_, f)| f.flags.compact_support.is_some());
        let all_vanish = terms.iter().all(|(_, f)| f.flags.vanishes_near_origin.is_some());
        let flags = FieldFlags {
            radial: terms.iter().all(|(_, f)| f.flags.radial),
            compact_support: all_compact
                .then(|| terms.iter().filter_map(|(_, f)| f.flags.compact_support).fold(0.0, f64::max)),
            vanishes_near_origin: all_vanish
                .then(|| terms.iter().filter_map(|(_, f)| f.flags.vanishes_near_origin).fold(f64::INFINITY, f64::min)),
        };
        let label = terms
            .iter()
            .map(|(c, f)| if *c == 1.0 { f.label.clone() } else { format!("{c}*{}", f.label) })
            .collect::<Vec<_>>()
            .join(" + ");
        ScalarField {
            dim,
            inner: Arc::new(Combination { terms: terms.to_vec() }),
            flags,
            domain: terms[0].1.domain,
            label,
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        ScalarField::linear_combination(&[(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        ScalarField::linear_combination(&[(1.0, self.clone()), (-1.0, other.clone())])
    }

    /// `u − v` where cancellation down to rounding error yields exact zeros, so
    /// that subtracting a numerically recovered polynomial leaves no noise floor.
    pub fn difference(&self, other: &ScalarField) -> ScalarField {
        let flags = FieldFlags {
            radial: self.flags.radial && other.flags.radial,
            compact_support: None,
            vanishes_near_origin: None,
        };
        ScalarField {
            dim: self.dim,
            inner: Arc::new(Difference { a: self.clone(), b: other.clone() }),
            flags,
            domain: self.domain,
            label: format!("{} - {}", self.label, other.label),
        }
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        ScalarField::linear_combination(&[(c, self.clone())])
    }

    pub fn add_constant(&self, c: f64) -> ScalarField {
        self.add(&ScalarField::constant(self.dim, c))
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        let compact = match (self.flags.compact_support, other.flags.compact_support) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let vanish = match (self.flags.vanishes_near_origin, other.flags.vanishes_near_origin) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        ScalarField {
            dim: self.dim,
            inner: Arc::new(Product { a: self.clone(), b: other.clone() }),
            flags: FieldFlags {
                radial: self.flags.radial && other.flags.radial,
                compact_support: compact,
                vanishes_near_origin: vanish,
            },
            domain: self.domain,
            label: format!("({})*({})", self.label, other.label),
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

struct Dilate {
    lambda: f64,
    inner: ScalarField,
}

impl FieldFn for Dilate {
    fn value(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|a| a * self.lambda).collect();
        self.inner.value(&y)
    }
    fn jet(&self, x: &[Jet]) -> Option<Jet> {
        let y: Vec<Jet> = x.iter().map(|a| a.clone() * self.lambda).collect();
        self.inner.jet(&y)
    }
}

struct Combination {
    terms: Vec<(f64, ScalarField)>,
}

impl FieldFn for Combination {
    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.value(x)).sum()
    }
    fn jet(&self, x: &[Jet]) -> Option<Jet> {
        let mut acc: Option<Jet> = None;
        for (c, f) in &self.terms {
            let j = f.jet(x)? * *c;
            acc = Some(match acc {
                Some(a) => a + j,
                None => j,
            });
        }
        acc
    }
}

// a − b with differences at the rounding level of the operands set to zero.
fn resolved_diff(a: f64, b: f64) -> f64 {
    let d = a - b;
    if d.abs() <= 16.0 * f64::EPSILON * (a.abs() + b.abs()) { 0.0 } else { d }
}

struct Difference {
    a: ScalarField,
    b: ScalarField,
}

impl FieldFn for Difference {
    fn value(&self, x: &[f64]) -> f64 {
        resolved_diff(self.a.value(x), self.b.value(x))
    }
    fn jet(&self, x: &[Jet]) -> Option<Jet> {
        let b = self.b.jet(x)?;
        Some(self.a.jet(x)?.zip_with(&b, resolved_diff))
    }
}

struct Product {
    a: ScalarField,
    b: ScalarField,
}

impl FieldFn for Product {
    fn value(&self, x: &[f64]) -> f64 {
        self.a.value(x) * self.b.value(x)
    }
    fn jet(&self, x: &[Jet]) -> Option<Jet> {
        Some(self.a.jet(x)? * self.b.jet(x)?)
    }
}

/// `(|S^{N-1}|)^{-1} Σ_σ w_σ u(rσ)`.
pub fn spherical_mean(u: &ScalarField, r: f64, grid: &PolarGrid) -> f64 {
    spherical_mean_with(u, r, &grid.sphere)
}

pub fn spherical_mean_with(u: &ScalarField, r: f64, sphere: &SphereRule) -> f64 {
    if u.is_radial() {
        let x: Vec<f64> = sphere.nodes[0].iter().map(|s| r * s).collect();
        return u.value(&x);
    }
    let mut x = vec![0.0; u.dim];
    let mut acc = CompensatedSum::default();
    for (s, w) in sphere.nodes.iter().zip(&sphere.weights) {
        for (xi, si) in x.iter_mut().zip(s) {
            *xi = r * si;
        }
        acc.add(w * u.value(&x));
    }
    acc.value() / sphere.total_weight()
}

/// Spherical mean of `∂^α u` at radius `r`.
pub fn spherical_mean_partial(u: &ScalarField, alpha: &MultiIndex, r: f64, sphere: &SphereRule) -> Result<f64> {
    let mut x = vec![0.0; u.dim];
    let mut acc = CompensatedSum::default();
    for (s, w) in sphere.nodes.iter().zip(&sphere.weights) {
        for (xi, si) in x.iter_mut().zip(s) {
            *xi = r * si;
        }
        acc.add(w * u.partial(&x, alpha)?);
    }
    Ok(acc.value() / sphere.total_weight())
}

struct RadialSymmetrized {
    inner: ScalarField,
    sphere: SphereRule,
    cache: Mutex<HashMap<(u64, usize), Arc<Vec<f64>>>>,
}

impl RadialSymmetrized {
    fn mean_at(&self, r: f64) -> f64 {
        spherical_mean_with(&self.inner, r, &self.sphere)
    }

    // F^{(m)}(r), m = 0..=order, for the profile F(r) = mean_σ u(rσ).
    fn profile_derivs(&self, r: f64, order: usize) -> Vec<f64> {
        let key = (r.to_bits() >> 12, order);
        if let Some(v) = self.cache.lock().expect("profile cache").get(&key) {
            return v.as_ref().clone();
        }
        let derivs = self.compute_derivs(r, order);
        let mut cache = self.cache.lock().expect("profile cache");
        if cache.len() > 200_000 {
            cache.clear();
        }
        cache.insert(key, Arc::new(derivs.clone()));
        derivs
    }

    fn compute_derivs(&self, r: f64, order: usize) -> Vec<f64> {
        let t = Jet::seed(&[r], order).pop().expect("seed");
        let total = self.sphere.total_weight();
        let mut acc = vec![0.0; order + 1];
        let mut analytic = true;
        for (s, w) in self.sphere.nodes.iter().zip(&self.sphere.weights) {
            let x: Vec<Jet> = s.iter().map(|si| t.clone() * *si).collect();
            match self.inner.jet(&x) {
                Some(j) => {
                    for (m, a) in acc.iter_mut().enumerate() {
                        *a += w * j.coeffs()[m] * factorial(m);
                    }
                }
                None => {
                    analytic = false;
                    break;
                }
            }
        }
        if analytic {
            return acc.into_iter().map(|a| a / total).collect();
        }
        (0..=order)
            .map(|m| {
                if m == 0 {
                    return self.mean_at(r);
                }
                let h = fd_step(m) * (1.0 + r);
                central_difference(&|y| self.mean_at(y[0]), &[r], &MultiIndex(vec![m as u32]), h)
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }
}

impl FieldFn for RadialSymmetrized {
    fn value(&self, x: &[f64]) -> f64 {
        self.profile_derivs(norm(x), 0)[0]
    }
    fn jet(&self, x: &[Jet]) -> Option<Jet> {
        let order = x[0].order();
        let r = crate::jet::norm_sq(x).sqrt();
        let derivs = self.profile_derivs(r.value(), order);
        Some(r.apply(&derivs))
    }
}

/// `u_S(x) = spherical mean of u over the sphere of radius |x|`, using the
/// default sphere rule for the dimension.
pub fn radial_symmetrize(u: &ScalarField) -> ScalarField {
    let sphere = SphereRule::new(u.dim, 1, GridConfig::default().mc_points, GridConfig::default().seed, u.domain);
    radial_symmetrize_with(u, &sphere)
}

pub fn radial_symmetrize_with(u: &ScalarField, sphere: &SphereRule) -> ScalarField {
    if u.is_radial() {
        return u.clone();
    }
    let flags = FieldFlags { radial: true, ..u.flags };
    ScalarField {
        dim: u.dim,
        inner: Arc::new(RadialSymmetrized { inner: u.clone(), sphere: sphere.clone(), cache: Mutex::new(HashMap::new()) }),
        flags,
        domain: u.domain,
        label: format!("sym[{}]", u.label),
    }
}

/// Max of `|u|` sampled over `τ < |x| < 2τ` with `resolution` radii.
pub fn annulus_max(u: &ScalarField, tau: f64, resolution: usize, sphere: &SphereRule) -> f64 {
    annulus_max_fn(u.dim, &|x| u.value(x), u.is_radial(), tau, resolution, sphere)
}

pub fn annulus_max_fn(
    dim: usize,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    radial: bool,
    tau: f64,
    resolution: usize,
    sphere: &SphereRule,
) -> f64 {
    use rayon::prelude::*;
    let m = resolution.max(2);
    let nodes: &[Vec<f64>] = if radial { &sphere.nodes[..1] } else { &sphere.nodes };
    (0..m)
        .into_par_iter()
        .map(|i| {
            let r = tau * (1.0 + i as f64 / (m - 1) as f64);
            let mut x = vec![0.0; dim];
            let mut best: f64 = 0.0;
            for s in nodes {
                for (xi, si) in x.iter_mut().zip(s) {
                    *xi = r * si;
                }
                let v = f(&x).abs();
                if v.is_finite() {
                    best = best.max(v);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Normalized smooth bump `θ(y) ∝ exp(-1/(1-|y|²))` discretized by a product
/// rule over the unit ball; weights sum to one.
pub fn mollifier_rule(dim: usize) -> Vec<(Vec<f64>, f64)> {
    let sphere = SphereRule::coarse(dim, 11);
    let gl = grid::gauss_legendre(12);
    let mut out = Vec::new();
    for &(t, wt) in &gl {
        let r = 0.5 * (t + 1.0);
        let theta = (-1.0 / (1.0 - r * r)).exp();
        let radial_w = 0.5 * wt * r.powi(dim as i32 - 1) * theta;
        for (s, ws) in sphere.nodes.iter().zip(&sphere.weights) {
            out.push((s.iter().map(|a| r * a).collect(), radial_w * ws));
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    out
}

struct Mollified {
    inner: ScalarField,
    n: f64,
    rule: Arc<Vec<(Vec<f64>, f64)>>,
}

impl FieldFn for Mollified {
    fn value(&self, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        let mut acc = 0.0;
        for (z, w) in self.rule.iter() {
            for ((yi, xi), zi) in y.iter_mut().zip(x).zip(z) {
                *yi = xi - zi / self.n;
            }
            acc += w * self.inner.value(&y);
        }
        acc
    }
}

/// `θ_n * u` with `θ_n(x) = n^N θ(nx)`.
pub fn mollify(u: &ScalarField, n: usize) -> ScalarField {
    let rule = Arc::new(mollifier_rule(u.dim));
    ScalarField {
        dim: u.dim,
        inner: Arc::new(Mollified { inner: u.clone(), n: n as f64, rule }),
        flags: FieldFlags { radial: u.flags.radial, ..Default::default() },
        domain: u.domain,
        label: format!("mollify[{}; 1/{n}]", u.label),
    }
}

/// `‖θ_n*u − u‖_{L^p(w dx)}` for each `n`, where `w` is a density.
pub fn mollify_error(
    u: &ScalarField,
    density: &Weight,
    p: ExtendedExponent,
    scales: &[usize],
    grid: &PolarGrid,
) -> Result<Vec<f64>> {
    let pf = p.to_f64();
    if !p.is_finite() {
        return Err(Error::InvalidExponent("mollification needs finite p".into()));
    }
    let norm_weight = density.root(pf);
    let base = wnorms::weighted_norm_with(u, &norm_weight, p, Region::Full, grid)?;
    if !base.is_finite() {
        return Err(Error::NonIntegrable(format!("{} has infinite weighted norm", u.label)));
    }
    let coarse = PolarGrid::new(
        grid.dim,
        GridConfig { points_per_panel: (grid.config.points_per_panel / 2).max(8), ..grid.config },
        grid.domain,
    )?;
    scales
        .iter()
        .map(|&n| {
            let diff = mollify(u, n).sub(u);
            wnorms::weighted_norm_with(&diff, &norm_weight, p, Region::Full, &coarse)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_differences_are_second_order() {
        let f = |x: &[f64]| (x[0] * 1.3).sin() * x[1].exp();
        let x = [0.4, -0.2];
        let alpha = MultiIndex(vec![2, 1]);
        let exact = -1.69 * (0.52f64).sin() * (-0.2f64).exp();
        let e1 = (central_difference(&f, &x, &alpha, 1e-2).unwrap() - exact).abs();
        let e2 = (central_difference(&f, &x, &alpha, 5e-3).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
        assert!(central_difference(&f, &x, &MultiIndex(vec![3, 2]), 1e-2).is_err());
    }

    #[test]
    fn mollifier_weights_normalized() {
        for n in 1..=3 {
            let total: f64 = mollifier_rule(n).iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
    }
}
