//! Weighted Lebesgue norms in the shifted-power, pure-power and exponential
//! scales, over full space, balls, exteriors and dyadic annuli.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExtendedExponent;
use crate::fields::{PolarGrid, ScalarField, TensorField};

/// Selects the weight family used by every norm of a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// `(1+|x|)^{-s-N/q}`.
    #[default]
    ShiftedPower,
    /// `|x|^{-s-N/q}`.
    PurePower,
    /// `e^{-s|x|}`.
    Exponential,
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scale::ShiftedPower => "shifted_power",
            Scale::PurePower => "pure_power",
            Scale::Exponential => "exponential",
        };
        f.write_str(s)
    }
}

/// Pointwise factor applied inside the norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `(1+|x|)^t`.
    ShiftedPower(f64),
    /// `|x|^t`.
    PurePower(f64),
    /// `e^{-s|x|}`.
    Exponential(f64),
}

impl Weight {
    /// The weight of `‖·‖_{L^q_s}` in the given scale.
    pub fn for_norm(scale: Scale, s: f64, q: ExtendedExponent, n: usize) -> Weight {
        let t = -s - q.dim_over(n);
        match scale {
            Scale::ShiftedPower => Weight::ShiftedPower(t),
            Scale::PurePower => Weight::PurePower(t),
            Scale::Exponential => Weight::Exponential(s),
        }
    }

    pub fn ln_factor(&self, r: f64) -> f64 {
        match *self {
            Weight::ShiftedPower(t) => t * r.ln_1p(),
            Weight::PurePower(t) => t * r.ln(),
            Weight::Exponential(s) => -s * r,
        }
    }

    pub fn factor(&self, r: f64) -> f64 {
        self.ln_factor(r).exp()
    }

    /// `w^{1/p}`: turns a measure density into a pointwise factor for an `L^p` norm.
    pub fn root(&self, p: f64) -> Weight {
        match *self {
            Weight::ShiftedPower(t) => Weight::ShiftedPower(t / p),
            Weight::PurePower(t) => Weight::PurePower(t / p),
            Weight::Exponential(s) => Weight::Exponential(s / p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Full,
    Ball(f64),
    Exterior(f64),
    /// `τ < |x| < 2τ`.
    Annulus(f64),
}

impl Region {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Region::Full => (0.0, f64::INFINITY),
            Region::Ball(r) => (0.0, r),
            Region::Exterior(r) => (r, f64::INFINITY),
            Region::Annulus(t) => (t, 2.0 * t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    /// `∞` when the tail test declares divergence.
    pub value: f64,
    pub tail_fraction: f64,
}

/// `(∫ |W h|^q)^{1/q}` (or a sampled sup for `q = ∞`) of a magnitude function `h ≥ 0`.
pub fn norm_of_magnitude<H>(
    h: &H,
    radial: bool,
    weight: &Weight,
    q: ExtendedExponent,
    region: Region,
    grid: &PolarGrid,
) -> Result<NormEstimate>
where
    H: Fn(&[f64]) -> f64 + Sync,
{
    norm_within(h, radial, weight, q, region, None, grid)
}

fn norm_within<H>(
    h: &H,
    radial: bool,
    weight: &Weight,
    q: ExtendedExponent,
    region: Region,
    support: Option<f64>,
    grid: &PolarGrid,
) -> Result<NormEstimate>
where
    H: Fn(&[f64]) -> f64 + Sync,
{
    let (lo, mut hi) = region.bounds();
    if let Some(r) = support {
        hi = hi.min(r);
        if hi <= lo {
            return Ok(NormEstimate { value: 0.0, tail_fraction: 0.0 });
        }
    }
    let radius = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let Some(qf) = q.finite().map(crate::exponents::rational_to_f64) else {
        let g = |x: &[f64]| {
            let m = h(x).abs();
            if m == 0.0 {
                0.0
            } else {
                (weight.ln_factor(radius(x)) + m.ln()).exp()
            }
        };
        let value = grid.sup(&g, radial, lo, hi);
        return Ok(NormEstimate { value, tail_fraction: 0.0 });
    };
    let integrand = |x: &[f64]| {
        let m = h(x).abs();
        if m == 0.0 || m.is_nan() {
            0.0
        } else {
            (qf * (weight.ln_factor(radius(x)) + m.ln())).exp()
        }
    };
    if lo == 0.0 {
        if let Weight::PurePower(_) = weight {
            check_origin(&integrand, radial, grid)?;
        }
    }
    let est = grid.integrate(&integrand, radial, lo, hi);
    if est.divergent {
        return Ok(NormEstimate { value: f64::INFINITY, tail_fraction: 1.0 });
    }
    Ok(NormEstimate { value: est.value.powf(1.0 / qf), tail_fraction: est.tail_fraction() })
}

// Octave sums approaching the origin must shrink for an integrable singularity.
fn check_origin<H>(integrand: &H, radial: bool, grid: &PolarGrid) -> Result<()>
where
    H: Fn(&[f64]) -> f64 + Sync,
{
    let r0 = grid.radial.r_min();
    let sums: Vec<f64> = (0..4)
        .map(|i| {
            let hi = r0 * 2f64.powi(-i);
            grid.integrate(integrand, radial, hi / 2.0, hi).value
        })
        .collect();
    if sums.iter().all(|s| *s > 0.0) && sums.windows(2).all(|w| w[1] >= 0.999 * w[0]) {
        return Err(Error::OriginSingular(format!(
            "inner octave sums {:.3e} → {:.3e} do not decay",
            sums[0], sums[3]
        )));
    }
    Ok(())
}

/// `‖u‖_{L^q_s}` in the given scale and region.
pub fn weighted_norm(
    u: &ScalarField,
    s: f64,
    q: ExtendedExponent,
    scale: Scale,
    region: Region,
    grid: &PolarGrid,
) -> Result<f64> {
    let w = Weight::for_norm(scale, s, q, grid.dim);
    weighted_norm_with(u, &w, q, region, grid)
}

pub fn weighted_norm_with(u: &ScalarField, weight: &Weight, q: ExtendedExponent, region: Region, grid: &PolarGrid) -> Result<f64> {
    weighted_norm_detailed(u, weight, q, region, grid).map(|e| e.value)
}

pub fn weighted_norm_detailed(
    u: &ScalarField,
    weight: &Weight,
    q: ExtendedExponent,
    region: Region,
    grid: &PolarGrid,
) -> Result<NormEstimate> {
    norm_within(&|x: &[f64]| u.value(x), u.is_radial(), weight, q, region, u.flags.compact_support, grid)
}

/// Weighted norm of the pointwise magnitude `|∇^k u|`.
pub fn tensor_norm(
    t: &TensorField,
    s: f64,
    p: ExtendedExponent,
    scale: Scale,
    region: Region,
    grid: &PolarGrid,
) -> Result<f64> {
    tensor_norm_detailed(t, s, p, scale, region, grid).map(|e| e.value)
}

pub fn tensor_norm_detailed(
    t: &TensorField,
    s: f64,
    p: ExtendedExponent,
    scale: Scale,
    region: Region,
    grid: &PolarGrid,
) -> Result<NormEstimate> {
    if t.order > 4 && !t.field.has_oracle() {
        return Err(Error::OrderTooHigh(t.order));
    }
    let w = Weight::for_norm(scale, s, p, grid.dim);
    norm_within(&|x: &[f64]| t.magnitude_at(x), t.is_radial_magnitude(), &w, p, region, t.field.flags.compact_support, grid)
}

/// Whether `‖u‖_{L^q_s}` is finite, decided by the dyadic tail test.
pub fn membership(u: &ScalarField, s: f64, q: ExtendedExponent, scale: Scale, grid: &PolarGrid) -> bool {
    matches!(weighted_norm(u, s, q, scale, Region::Full, grid), Ok(v) if v.is_finite())
}
