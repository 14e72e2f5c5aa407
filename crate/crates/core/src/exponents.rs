//! Exact exponent bookkeeping: tensor dimensions, Sobolev conjugates, the
//! admissible target intervals `I_{j,p}` and the classification of the
//! growth exponent `s` against the excluded integers `{-k, ..., -1}`.
//!
//! Lebesgue exponents are exact rationals (or the symbol `∞`) so that the
//! case splits on `p = N/j` are decided without rounding.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Lebesgue exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtendedExponent {
    Finite(Rational64),
    Infinite,
}

impl ExtendedExponent {
    pub fn integer(n: i64) -> Self {
        ExtendedExponent::Finite(Rational64::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        ExtendedExponent::Finite(Rational64::new(num, den))
    }

    /// Checked constructor: rejects values below 1.
    pub fn new(value: Rational64) -> Result<Self> {
        if value < Rational64::one() {
            return Err(Error::InvalidExponent(format!("{value} < 1")));
        }
        Ok(ExtendedExponent::Finite(value))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedExponent::Finite(_))
    }

    pub fn finite(&self) -> Option<Rational64> {
        match self {
            ExtendedExponent::Finite(r) => Some(*r),
            ExtendedExponent::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the symbol `∞`.
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtendedExponent::Finite(r) => rational_to_f64(*r),
            ExtendedExponent::Infinite => f64::INFINITY,
        }
    }

    /// `N/q`, which is `0` for `q = ∞`.
    pub fn dim_over(&self, n: usize) -> f64 {
        match self {
            ExtendedExponent::Finite(r) => n as f64 / rational_to_f64(*r),
            ExtendedExponent::Infinite => 0.0,
        }
    }

    /// Hölder conjugate `p' = p/(p-1)`.
    pub fn conjugate(&self) -> ExtendedExponent {
        match self {
            ExtendedExponent::Infinite => ExtendedExponent::integer(1),
            ExtendedExponent::Finite(r) if r.is_one() => ExtendedExponent::Infinite,
            ExtendedExponent::Finite(r) => ExtendedExponent::Finite(r / (r - Rational64::one())),
        }
    }
}

impl PartialOrd for ExtendedExponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedExponent {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtendedExponent::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.cmp(b),
            (Finite(_), Infinite) => Ordering::Less,
            (Infinite, Finite(_)) => Ordering::Greater,
            (Infinite, Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtendedExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedExponent::Finite(r) => write!(f, "{r}"),
            ExtendedExponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtendedExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞" | "Inf") {
            return Ok(ExtendedExponent::Infinite);
        }
        ExtendedExponent::new(parse_rational(t)?)
    }
}

impl Serialize for ExtendedExponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtendedExponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(i) => ExtendedExponent::new(Rational64::from_integer(i)).map_err(D::Error::custom),
            Raw::Float(x) if x == f64::INFINITY => Ok(ExtendedExponent::Infinite),
            Raw::Float(x) => rational_from_f64(x).and_then(ExtendedExponent::new).map_err(D::Error::custom),
            Raw::Text(t) => t.parse().map_err(D::Error::custom),
        }
    }
}

/// Parses `"3"`, `"-5/4"` or a decimal such as `"-1.05"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let t = s.trim();
    let bad = || Error::InvalidExponent(format!("cannot parse `{s}` as a rational"));
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    if let Ok(n) = t.parse::<i64>() {
        return Ok(Rational64::from_integer(n));
    }
    // Decimal literal: exact base-10 conversion, no binary rounding.
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').ok_or_else(bad)?;
    if frac_part.len() > 15 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
    let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    let den = 10i64.pow(frac_part.len() as u32);
    let r = Rational64::new(int * den + frac, den);
    Ok(if neg { -r } else { r })
}

/// Best rational approximation of a float (continued fractions, denominators ≤ 10^6).
pub fn rational_from_f64(x: f64) -> Result<Rational64> {
    if !x.is_finite() {
        return Err(Error::InvalidExponent(format!("{x} is not finite")));
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut v = x;
    for _ in 0..40 {
        let a = v.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1).and_then(|t| t.checked_add(h0));
        let k2 = a.checked_mul(k1).and_then(|t| t.checked_add(k0));
        let (Some(h2), Some(k2)) = (h2, k2) else { break };
        if k2 > 1_000_000 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a as f64;
        if (h1 as f64 / k1 as f64 - x).abs() <= 1e-15 * x.abs().max(1.0) || frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    Ok(Rational64::new(h1, k1))
}

pub fn rational_to_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Dimension of the space of real symmetric tensors of order `k` on `R^N`.
pub fn tensor_dim(k: usize, n: usize) -> usize {
    assert!(n >= 1, "dimension must be positive");
    binomial((n + k - 1) as u64, k as u64) as usize
}

/// The `j`-th Sobolev conjugate `Np/(N - jp)`, or `∞` when `p ≥ N/j`.
pub fn sobolev_exponent(p: ExtendedExponent, j: usize, n: usize) -> ExtendedExponent {
    let ExtendedExponent::Finite(p) = p else {
        return ExtendedExponent::Infinite;
    };
    let nn = Rational64::from_integer(n as i64);
    let jj = Rational64::from_integer(j as i64);
    if p * jj < nn {
        ExtendedExponent::Finite(nn * p / (nn - jj * p))
    } else {
        ExtendedExponent::Infinite
    }
}

/// Target exponents `q` for which `∇^{k-j}(u - π_u)` is controlled in `L^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleInterval {
    pub lower: ExtendedExponent,
    pub upper: ExtendedExponent,
    pub upper_closed: bool,
}

impl AdmissibleInterval {
    pub fn contains(&self, q: ExtendedExponent) -> bool {
        if q < self.lower {
            return false;
        }
        match q.cmp(&self.upper) {
            Ordering::Less => true,
            Ordering::Equal => self.upper_closed,
            Ordering::Greater => false,
        }
    }
}

impl fmt::Display for AdmissibleInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.upper_closed { ']' } else { ')' };
        write!(f, "[{}, {}{}", self.lower, self.upper, close)
    }
}

/// `I_{j,p}`: `[p, p^{*j}]`, except `[p, ∞)` when `p = N/j` with `N > 1`.
pub fn admissible_interval(j: usize, p: ExtendedExponent, n: usize) -> AdmissibleInterval {
    let upper = sobolev_exponent(p, j, n);
    let critical = match p {
        ExtendedExponent::Finite(p) => {
            p * Rational64::from_integer(j as i64) == Rational64::from_integer(n as i64)
        }
        ExtendedExponent::Infinite => false,
    };
    AdmissibleInterval {
        lower: p,
        upper,
        upper_closed: !(critical && n > 1),
    }
}

/// Decides whether `⋃_{finite p₁ ∈ I_{1,p}} I_{j-1,p₁} = I_{j,p}`.
///
/// The upper endpoint of `I_{j-1,p₁}` is nondecreasing in `p₁` and every member
/// contains its own lower endpoint `p₁ ≥ p`, so the union is the interval from
/// `p` to the right end reached at the largest admissible finite `p₁`, or `∞`
/// (closed) when the finite part of `I_{1,p}` is unbounded.
pub fn interval_composition_check(j: usize, p: ExtendedExponent, n: usize) -> bool {
    assert!(j >= 2, "composition needs j >= 2");
    let first = admissible_interval(1, p, n);
    let union = match first.upper {
        ExtendedExponent::Finite(p1_max) => {
            let last = admissible_interval(j - 1, ExtendedExponent::Finite(p1_max), n);
            AdmissibleInterval {
                lower: p,
                upper: last.upper,
                upper_closed: last.upper_closed,
            }
        }
        // Finite p₁ range is [p, ∞): some p₁ > N/(j-1) gives a closed `∞`.
        ExtendedExponent::Infinite => AdmissibleInterval {
            lower: p,
            upper: ExtendedExponent::Infinite,
            upper_closed: true,
        },
    };
    union == admissible_interval(j, p, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeComponent {
    /// `s > -1`.
    AboveMinusOne,
    /// `s ∈ (-(m+1), -m)` for `1 ≤ m ≤ k-1`.
    Band(u32),
    /// `s < -k`.
    BelowMinusK,
    /// `s ∈ {-k, ..., -1}`.
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub k: usize,
    pub s: f64,
    pub component: RegimeComponent,
    /// Degrees `≥ k_s` of `π_u` are determined by behavior at infinity.
    pub k_s: usize,
}

impl RegimeInfo {
    pub fn is_excluded(&self) -> bool {
        self.component == RegimeComponent::Excluded
    }
}

/// Classifies `s` for order `k`. Exclusion is an exact integer hit.
pub fn regime(s: f64, k: usize) -> RegimeInfo {
    let kf = k as f64;
    let k_s_raw = (s + kf + 1.0).floor().clamp(0.0, kf) as usize;
    let (component, k_s) = if s > -1.0 {
        (RegimeComponent::AboveMinusOne, k)
    } else if s < -kf {
        (RegimeComponent::BelowMinusK, 0)
    } else if s.fract() == 0.0 {
        (RegimeComponent::Excluded, k_s_raw)
    } else {
        let m = (-s).floor() as u32;
        (RegimeComponent::Band(m), k_s_raw)
    };
    RegimeInfo { k, s, component, k_s }
}

/// Same as [`regime`] on an exact rational.
pub fn regime_exact(s: Rational64, k: usize) -> RegimeInfo {
    let mut info = regime(rational_to_f64(s), k);
    let excluded = s.is_integer()
        && s.is_negative()
        && s >= Rational64::from_integer(-(k as i64));
    if excluded {
        info.component = RegimeComponent::Excluded;
    } else if info.component == RegimeComponent::Excluded {
        // float rounding landed on an integer that the rational is not
        info = regime(rational_to_f64(s) + if s > Rational64::zero() { 0.0 } else { f64::EPSILON }, k);
    }
    info
}
