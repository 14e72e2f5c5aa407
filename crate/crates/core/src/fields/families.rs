//! Built-in field families and the string registry used by the CLI, e.g.
//! `"gaussian(1.0)"`, `"2 + bump(1.5)"`, `"coord_poly([1,0,0])*bump(2)"`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::jet::{norm_sq, MultiIndex, Scalar};

use super::{FieldFlags, ScalarField};

/// A closed-form field written once over any [`Scalar`], which yields both
/// values and analytic derivatives.
pub trait Family: Send + Sync + 'static {
    fn eval<T: Scalar>(&self, x: &[T]) -> T;
}

#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub c: f64,
}

impl Family for Constant {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        x[0].lift(self.c)
    }
}

/// `exp(-a|x|²)`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub a: f64,
}

impl Family for Gaussian {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        (norm_sq(x) * (-self.a)).exp()
    }
}

/// `e·exp(-1/(1-|x|²/R²))` inside `B_R`, zero outside; equals 1 at the origin.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub radius: f64,
}

impl Family for Bump {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        bump_of(norm_sq(x) / (self.radius * self.radius))
    }
}

fn bump_of<T: Scalar>(rho2: T) -> T {
    if rho2.value() >= 1.0 {
        return rho2.lift(0.0);
    }
    let inv = (rho2.lift(1.0) - rho2).recip();
    (inv * -1.0 + 1.0).exp()
}

/// Bump centered at `x0`.
#[derive(Debug, Clone)]
pub struct ShiftedBump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Family for ShiftedBump {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let y: Vec<T> = x.iter().zip(&self.center).map(|(a, c)| a.clone() - *c).collect();
        bump_of(norm_sq(&y) / (self.radius * self.radius))
    }
}

/// `(1+|x|)^t`.
#[derive(Debug, Clone, Copy)]
pub struct Power {
    pub t: f64,
}

impl Family for Power {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        (norm_sq(x).sqrt() + 1.0).powf(self.t)
    }
}

/// `(1+|x|²)^{-(n-2)/2}`.
#[derive(Debug, Clone, Copy)]
pub struct AubinTalenti {
    pub n: f64,
}

impl Family for AubinTalenti {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        (norm_sq(x) + 1.0).powf(-(self.n - 2.0) / 2.0)
    }
}

/// `Σ c_α x^α`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub terms: Vec<(MultiIndex, f64)>,
}

impl Family for Polynomial {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        let mut acc = x[0].lift(0.0);
        for (alpha, c) in &self.terms {
            let mut m = x[0].lift(*c);
            for (xi, &a) in x.iter().zip(&alpha.0) {
                for _ in 0..a {
                    m = m * xi.clone();
                }
            }
            acc = acc + m;
        }
        acc
    }
}

/// Clamped cubic spline `g(r)` through `(rᵢ, vᵢ)` with `g' = 0` at both
/// ends, extended as a constant beyond the last knot.
#[derive(Debug, Clone)]
pub struct RadialSpline {
    knots: Vec<f64>,
    tail: f64,
    // per segment: value, slope, second and third Taylor coefficients at the left knot
    segments: Vec<[f64; 4]>,
}

impl RadialSpline {
    pub fn new(points: &[(f64, f64)]) -> Result<RadialSpline> {
        if points.len() < 2 {
            return Err(Error::UnknownField("radial_spline needs at least two knots".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) || points[0].0 < 0.0 {
            return Err(Error::UnknownField("radial_spline knots must be increasing and nonnegative".into()));
        }
        let n = points.len();
        let h: Vec<f64> = points.windows(2).map(|w| w[1].0 - w[0].0).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        // Tridiagonal system for second derivatives M with clamped ends (slopes 0).
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        b[0] = 2.0 * h[0];
        c[0] = h[0];
        d[0] = 6.0 * ((y[1] - y[0]) / h[0]);
        for i in 1..n - 1 {
            a[i] = h[i - 1];
            b[i] = 2.0 * (h[i - 1] + h[i]);
            c[i] = h[i];
            d[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        a[n - 1] = h[n - 2];
        b[n - 1] = 2.0 * h[n - 2];
        d[n - 1] = -6.0 * ((y[n - 1] - y[n - 2]) / h[n - 2]);
        for i in 1..n {
            let m = a[i] / b[i - 1];
            b[i] -= m * c[i - 1];
            d[i] -= m * d[i - 1];
        }
        let mut mm = vec![0.0; n];
        mm[n - 1] = d[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            mm[i] = (d[i] - c[i] * mm[i + 1]) / b[i];
        }
        let segments = (0..n - 1)
            .map(|i| {
                let slope = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * mm[i] + mm[i + 1]) / 6.0;
                [y[i], slope, mm[i] / 2.0, (mm[i + 1] - mm[i]) / (6.0 * h[i])]
            })
            .collect();
        Ok(RadialSpline { knots: points.iter().map(|p| p.0).collect(), tail: y[n - 1], segments })
    }

    pub fn eval_r<T: Scalar>(&self, r: T) -> T {
        let rv = r.value();
        let last = *self.knots.last().unwrap();
        if rv >= last {
            return r.lift(self.tail);
        }
        let i = match self.knots.iter().rposition(|&k| k <= rv) {
            Some(i) => i,
            None => return r.lift(self.segments[0][0]),
        };
        let s = &self.segments[i];
        let t = r - self.knots[i];
        ((t.clone() * s[3] + s[2]) * t.clone() + s[1]) * t + s[0]
    }
}

impl Family for RadialSpline {
    fn eval<T: Scalar>(&self, x: &[T]) -> T {
        self.eval_r(norm_sq(x).sqrt())
    }
}

fn args_of(call: &str) -> Result<(String, Vec<Value>)> {
    let open = call.find('(').ok_or_else(|| Error::UnknownField(format!("`{call}`: expected name(args)")))?;
    if !call.ends_with(')') {
        return Err(Error::UnknownField(format!("`{call}`: missing `)`")));
    }
    let name = call[..open].trim().to_string();
    let inner = &call[open + 1..call.len() - 1];
    let args: Vec<Value> = serde_json::from_str(&format!("[{inner}]"))
        .map_err(|e| Error::UnknownField(format!("`{call}`: bad arguments ({e})")))?;
    Ok((name, args))
}

fn num(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::UnknownField(format!("{what}: expected a number, got {v}")))
}

fn vec_f64(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::UnknownField(format!("{what}: expected an array")))?
        .iter()
        .map(|a| num(a, what))
        .collect()
}

fn expect_args(name: &str, args: &[Value], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::UnknownField(format!("{name} takes {n} argument(s), got {}", args.len())));
    }
    Ok(())
}

/// One named family instance in dimension `dim`.
pub fn builtin(call: &str, dim: usize) -> Result<ScalarField> {
    let (name, args) = args_of(call)?;
    let label = call.trim().to_string();
    let radial = FieldFlags::radial();
    let field = match name.as_str() {
        "gaussian" => {
            expect_args(&name, &args, 1)?;
            ScalarField::from_family(dim, Gaussian { a: num(&args[0], "gaussian")? }, radial, label)
        }
        "bump" => {
            expect_args(&name, &args, 1)?;
            let r = num(&args[0], "bump")?;
            let flags = FieldFlags { compact_support: Some(r), ..radial };
            ScalarField::from_family(dim, Bump { radius: r }, flags, label)
        }
        "power" => {
            expect_args(&name, &args, 1)?;
            ScalarField::from_family(dim, Power { t: num(&args[0], "power")? }, radial, label)
        }
        "aubin_talenti" => {
            expect_args(&name, &args, 1)?;
            ScalarField::from_family(dim, AubinTalenti { n: num(&args[0], "aubin_talenti")? }, radial, label)
        }
        "constant" => {
            expect_args(&name, &args, 1)?;
            ScalarField::from_family(dim, Constant { c: num(&args[0], "constant")? }, radial, label)
        }
        "coord_poly" => {
            expect_args(&name, &args, 1)?;
            let alpha = vec_f64(&args[0], "coord_poly")?;
            if alpha.len() != dim || alpha.iter().any(|a| *a < 0.0 || a.fract() != 0.0) {
                return Err(Error::UnknownField(format!("coord_poly: need {dim} nonnegative integers")));
            }
            let alpha = MultiIndex(alpha.iter().map(|&a| a as u32).collect());
            let flags = FieldFlags { radial: alpha.order() == 0, ..Default::default() };
            ScalarField::from_family(dim, Polynomial { terms: vec![(alpha, 1.0)] }, flags, label)
        }
        "shifted_bump" => {
            expect_args(&name, &args, 2)?;
            let center = vec_f64(&args[0], "shifted_bump")?;
            if center.len() != dim {
                return Err(Error::UnknownField(format!("shifted_bump: center must have {dim} entries")));
            }
            let radius = num(&args[1], "shifted_bump")?;
            let reach = super::norm(&center) + radius;
            let flags = FieldFlags { compact_support: Some(reach), ..Default::default() };
            ScalarField::from_family(dim, ShiftedBump { center, radius }, flags, label)
        }
        "radial_spline" => {
            expect_args(&name, &args, 1)?;
            let knots = args[0]
                .as_array()
                .ok_or_else(|| Error::UnknownField("radial_spline: expected [[r, v], ...]".into()))?
                .iter()
                .map(|kv| {
                    let pair = vec_f64(kv, "radial_spline")?;
                    if pair.len() != 2 {
                        return Err(Error::UnknownField("radial_spline: knots are [r, v] pairs".into()));
                    }
                    Ok((pair[0], pair[1]))
                })
                .collect::<Result<Vec<_>>>()?;
            ScalarField::from_family(dim, RadialSpline::new(&knots)?, radial, label)
        }
        _ => return Err(Error::UnknownField(format!("no built-in family named `{name}`"))),
    };
    Ok(field)
}

// Splits at `sep` outside brackets/parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut depth = 0i32;
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

// Top-level terms, each keeping its leading `+`/`-`. A sign counts as binary
// unless it follows another operator or the exponent marker of a number.
fn split_terms(s: &str) -> Vec<&str> {
    let mut depth = 0i32;
    let mut out = Vec::new();
    let mut start = 0;
    let mut prev: Option<char> = None;
    let mut prev2: Option<char> = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            '+' | '-' if depth == 0 => {
                let after_operator = matches!(prev, None | Some('+') | Some('-') | Some('*'));
                let exponent = matches!(prev, Some('e') | Some('E')) && prev2.is_some_and(|c| c.is_ascii_digit() || c == '.');
                if !after_operator && !exponent && i > start {
                    out.push(&s[start..i]);
                    start = i;
                }
            }
            _ => {}
        }
        if !ch.is_whitespace() {
            prev2 = prev;
            prev = Some(ch);
        }
    }
    out.push(&s[start..]);
    out
}

/// Parses a field expression: terms joined by `+` or `-`, each a product (`*`)
/// of numbers and family calls.
pub fn parse_field(spec: &str, dim: usize) -> Result<ScalarField> {
    if dim == 0 {
        return Err(Error::InvalidCase("dimension must be positive".into()));
    }
    let mut terms = Vec::new();
    for term in split_terms(spec) {
        let term = term.trim();
        let (sign, body) = match (term.strip_prefix('-'), term.strip_prefix('+')) {
            (Some(rest), _) => (-1.0, rest.trim()),
            (None, Some(rest)) => (1.0, rest.trim()),
            _ => (1.0, term),
        };
        if body.is_empty() {
            return Err(Error::UnknownField(format!("empty term in `{spec}`")));
        }
        let mut coeff = sign;
        let mut factor: Option<ScalarField> = None;
        for f in split_top(body, '*') {
            let f = f.trim();
            if let Ok(c) = f.parse::<f64>() {
                coeff *= c;
                continue;
            }
            let g = builtin(f, dim)?;
            factor = Some(match factor {
                Some(acc) => acc.mul(&g),
                None => g,
            });
        }
        let factor = factor.unwrap_or_else(|| ScalarField::constant(dim, 1.0));
        terms.push((coeff, factor));
    }
    let field = if terms.len() == 1 && terms[0].0 == 1.0 {
        terms.pop().unwrap().1
    } else {
        ScalarField::linear_combination(&terms)
    };
    Ok(field.with_label(spec.trim()))
}

/// A seeded random radial spline on knots `0, 0.5, …`; values in `[-1, 1]`
/// and a random constant tail.
pub fn random_radial_spline(rng: &mut ChaCha8Rng, dim: usize, label: impl Into<String>) -> ScalarField {
    let knots = rng.gen_range(4..=7);
    let step = rng.gen_range(0.4..0.9);
    let pts: Vec<(f64, f64)> = (0..knots).map(|i| (i as f64 * step, rng.gen_range(-1.0..1.0))).collect();
    let spline = RadialSpline::new(&pts).expect("increasing knots");
    ScalarField::from_family(dim, spline, FieldFlags::radial(), label)
}

/// Seeded `g(|x|)·P(x)` with `g` a compactly supported spline (zero at its last
/// knot) and `P` a random polynomial of degree ≤ 2.
pub fn random_angular_field(seed: u64, dim: usize) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let knots = rng.gen_range(3..=6);
    let step = rng.gen_range(0.3..0.8);
    let mut pts: Vec<(f64, f64)> = (0..knots).map(|i| (i as f64 * step, rng.gen_range(-1.0..1.0))).collect();
    pts.last_mut().unwrap().1 = 0.0;
    let reach = pts.last().unwrap().0;
    let g = ScalarField::from_family(
        dim,
        RadialSpline::new(&pts).expect("increasing knots"),
        FieldFlags { radial: true, compact_support: Some(reach), vanishes_near_origin: None },
        "g",
    );
    let mut terms = vec![(MultiIndex::zero(dim), rng.gen_range(-1.0..1.0))];
    for d in 1..=2 {
        for alpha in crate::jet::multi_indices(dim, d) {
            terms.push((alpha, rng.gen_range(-1.0..1.0)));
        }
    }
    let p = ScalarField::from_family(dim, Polynomial { terms }, FieldFlags::default(), "P");
    g.mul(&p).with_label(format!("angular_spline(seed={seed})"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_parses_compound_expressions() {
        let u = parse_field("2 + 3*gaussian(1.0)", 3).unwrap();
        assert!((u.value(&[0.0, 0.0, 0.0]) - 5.0).abs() < 1e-15);
        assert!(u.is_radial());
        let v = parse_field("coord_poly([1,0])*bump(2)", 2).unwrap();
        assert!(!v.is_radial());
        assert_eq!(v.flags.compact_support, Some(2.0));
        assert!(parse_field("nonsense(1)", 2).is_err());
        assert!(parse_field("gaussian(1, 2)", 2).is_err());
        let w = parse_field("-bump(1)", 1).unwrap();
        assert!((w.value(&[0.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn spline_interpolates_and_is_clamped() {
        let s = RadialSpline::new(&[(0.0, 1.0), (1.0, 0.5), (2.0, 2.0), (3.0, 0.0)]).unwrap();
        for (r, v) in [(0.0, 1.0), (1.0, 0.5), (2.0, 2.0), (3.0, 0.0), (7.0, 0.0)] {
            assert!((s.eval_r(r) - v).abs() < 1e-12, "{r}");
        }
        let h = 1e-6;
        assert!(((s.eval_r(h) - s.eval_r(0.0)) / h).abs() < 1e-5);
        assert!(((s.eval_r(3.0) - s.eval_r(3.0 - h)) / h).abs() < 1e-5);
    }

    #[test]
    fn bump_is_one_at_origin_and_vanishes_outside() {
        let b = parse_field("bump(2)", 3).unwrap();
        assert!((b.value(&[0.0; 3]) - 1.0).abs() < 1e-15);
        assert_eq!(b.value(&[2.0, 0.0, 0.0]), 0.0);
    }
}
