//! Truncated multivariate Taylor jets, used as forward-mode derivatives for
//! the built-in field families.
//!
//! A [`Jet`] over `JetSpace(dim, order)` stores the coefficients `c_α` of
//! `Σ_{|α| ≤ order} c_α δ^α`, so that `∂^α u(x₀) = α! c_α`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

// Inline storage covers dimension 3 up to order 2 without allocation.
type Coeffs = SmallVec<[f64; 10]>;

/// Multi-index `α ∈ N^N`, compared lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut a = vec![0; n];
        a[i] = 1;
        MultiIndex(a)
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `α! = Π α_i!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a as usize)).product()
    }

    /// `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` if `other ≤ self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All multi-indices of exact order `k` in `n` variables, lexicographically descending.
pub fn multi_indices(n: usize, k: usize) -> Vec<MultiIndex> {
    fn rec(n: usize, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() == n - 1 {
            prefix.push(k as u32);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for a in (0..=k).rev() {
            prefix.push(a as u32);
            rec(n, k - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Monomial basis and multiplication table for jets of a given dimension and order.
#[derive(Debug)]
pub struct JetSpace {
    dim: usize,
    order: usize,
    monomials: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    products: Vec<(u32, u32, u32)>,
}

impl JetSpace {
    fn build(dim: usize, order: usize) -> Self {
        let monomials: Vec<MultiIndex> = (0..=order).flat_map(|d| multi_indices(dim, d)).collect();
        let index: HashMap<MultiIndex, usize> =
            monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if a.order() + b.order() <= order {
                    let t = index[&a.add(b)];
                    products.push((i as u32, j as u32, t as u32));
                }
            }
        }
        JetSpace { dim, order, monomials, index, products }
    }

    /// Shared space for `(dim, order)`.
    pub fn get(dim: usize, order: usize) -> Arc<JetSpace> {
        thread_local! {
            static LOCAL: std::cell::RefCell<HashMap<(usize, usize), Arc<JetSpace>>> = std::cell::RefCell::new(HashMap::new());
        }
        if let Some(hit) = LOCAL.with(|m| m.borrow().get(&(dim, order)).cloned()) {
            return hit;
        }
        let space = Self::shared(dim, order);
        LOCAL.with(|m| m.borrow_mut().insert((dim, order), space.clone()));
        space
    }

    fn shared(dim: usize, order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet cache poisoned");
        guard
            .entry((dim, order))
            .or_insert_with(|| Arc::new(JetSpace::build(dim, order)))
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.index.get(alpha).copied()
    }
}

#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Coeffs,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.space.dim)
            .field("order", &self.space.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, c: f64) -> Self {
        let mut coeffs: Coeffs = smallvec![0.0; space.len()];
        coeffs[0] = c;
        Jet { space: space.clone(), coeffs }
    }

    /// `x₀ + δ_i`.
    pub fn variable(space: &Arc<JetSpace>, x0: f64, i: usize) -> Self {
        let mut j = Jet::constant(space, x0);
        if space.order >= 1 {
            let idx = space.index[&MultiIndex::unit(space.dim, i)];
            j.coeffs[idx] = 1.0;
        }
        j
    }

    /// The seed vector `(x₀ + δ₁, …, x₀ₙ + δₙ)` for a point.
    pub fn seed(x: &[f64], order: usize) -> Vec<Jet> {
        let space = JetSpace::get(x.len(), order);
        x.iter().enumerate().map(|(i, &xi)| Jet::variable(&space, xi, i)).collect()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.space.index_of(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    /// `∂^α` of the represented function at the expansion point.
    pub fn derivative(&self, alpha: &MultiIndex) -> f64 {
        self.coeff(alpha) * alpha.factorial()
    }

    /// Coefficient-wise combination of two jets over the same space.
    pub fn zip_with(mut self, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a = f(*a, *b);
        }
        self
    }

    fn mul_jet(&self, rhs: &Jet) -> Jet {
        let mut out: Coeffs = smallvec![0.0; self.coeffs.len()];
        for &(i, j, t) in &self.space.products {
            out[t as usize] += self.coeffs[i as usize] * rhs.coeffs[j as usize];
        }
        Jet { space: self.space.clone(), coeffs: out }
    }

    /// `g(self)` from the derivatives `g^(n)(a₀)`, `n = 0..=order`, by Horner in `δ = self - a₀`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.space.order;
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = Jet::constant(&self.space, derivs[order] / factorial(order));
        for n in (0..order).rev() {
            acc = acc.mul_jet(&delta);
            acc.coeffs[0] += derivs[n] / factorial(n);
        }
        acc
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs.recip())
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

fn exp_derivs(a: f64, order: usize) -> Vec<f64> {
    vec![a.exp(); order + 1]
}

fn ln_derivs(a: f64, order: usize) -> Vec<f64> {
    let mut d = vec![a.ln()];
    for n in 1..=order {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        d.push(sign * factorial(n - 1) / a.powi(n as i32));
    }
    d
}

fn powf_derivs(a: f64, e: f64, order: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(order + 1);
    let mut falling = 1.0;
    for n in 0..=order {
        d.push(falling * a.powf(e - n as f64));
        falling *= e - n as f64;
    }
    d
}

fn powi_derivs(a: f64, e: i32, order: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(order + 1);
    let mut falling = 1.0;
    for n in 0..=order {
        let m = e - n as i32;
        d.push(if falling == 0.0 { 0.0 } else { falling * a.powi(m) });
        falling *= m as f64;
    }
    d
}

fn sin_derivs(a: f64, order: usize) -> Vec<f64> {
    let (s, c) = a.sin_cos();
    (0..=order).map(|n| [s, c, -s, -c][n % 4]).collect()
}

fn cos_derivs(a: f64, order: usize) -> Vec<f64> {
    let (s, c) = a.sin_cos();
    (0..=order).map(|n| [c, -s, -c, s][n % 4]).collect()
}

/// Numbers that field formulas can be written over: plain `f64` or a [`Jet`].
pub trait Scalar:
    Clone
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn value(&self) -> f64;
    /// A constant living in the same space as `self`.
    fn lift(&self, c: f64) -> Self;
    /// Derivative order carried (0 for `f64`).
    fn order(&self) -> usize;
    /// `g(self)` given `g^(n)(value)` for `n = 0..=order`.
    fn apply(&self, derivs: &[f64]) -> Self;

    fn exp(&self) -> Self {
        self.apply(&exp_derivs(self.value(), self.order()))
    }
    fn ln(&self) -> Self {
        self.apply(&ln_derivs(self.value(), self.order()))
    }
    fn powf(&self, e: f64) -> Self {
        self.apply(&powf_derivs(self.value(), e, self.order()))
    }
    fn powi(&self, e: i32) -> Self {
        self.apply(&powi_derivs(self.value(), e, self.order()))
    }
    fn sqrt(&self) -> Self {
        self.powf(0.5)
    }
    fn recip(&self) -> Self {
        self.powi(-1)
    }
    fn sin(&self) -> Self {
        self.apply(&sin_derivs(self.value(), self.order()))
    }
    fn cos(&self) -> Self {
        self.apply(&cos_derivs(self.value(), self.order()))
    }
}

impl Scalar for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn order(&self) -> usize {
        0
    }
    fn apply(&self, derivs: &[f64]) -> Self {
        derivs[0]
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn powf(&self, e: f64) -> Self {
        f64::powf(*self, e)
    }
    fn powi(&self, e: i32) -> Self {
        f64::powi(*self, e)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn lift(&self, c: f64) -> Self {
        Jet::constant(&self.space, c)
    }
    fn order(&self) -> usize {
        self.space.order
    }
    fn apply(&self, derivs: &[f64]) -> Self {
        self.compose(derivs)
    }
}

/// `Σ xᵢ²`.
pub fn norm_sq<T: Scalar>(x: &[T]) -> T {
    let mut acc = x[0].clone() * x[0].clone();
    for xi in &x[1..] {
        acc = acc + xi.clone() * xi.clone();
    }
    acc
}
