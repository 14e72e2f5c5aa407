//! Spherical-polar quadrature: log-spaced Gauss–Legendre radial panels times a
//! sphere rule, with geometric tail extrapolation beyond the truncation radius.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Domain;

/// Surface measure `|S^{N-1}| = 2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Volume of the unit ball in `R^N`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

// Γ(n/2) by the recursion Γ(x+1) = xΓ(x).
fn gamma_half(n: usize) -> f64 {
    let (mut x, mut g) = if n % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    while x < n as f64 / 2.0 - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(points: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(points.max(2)).expect("nonzero");
    GaussLegendre::new(n)
        .as_node_weight_pairs()
        .to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub r_max: f64,
    pub panels: usize,
    pub points_per_panel: usize,
    /// Multiplies the default sphere resolution.
    pub sphere_factor: usize,
    pub mc_points: usize,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            r_max: 1e4,
            panels: 64,
            points_per_panel: 16,
            sphere_factor: 1,
            mc_points: 1 << 16,
            seed: 0x5eed,
        }
    }
}

impl GridConfig {
    /// Doubles radial and spherical resolution.
    pub fn refined(&self) -> GridConfig {
        GridConfig {
            points_per_panel: self.points_per_panel * 2,
            sphere_factor: self.sphere_factor * 2,
            ..*self
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Monte Carlo rules only: per-sample spread, for standard-error estimates.
    pub monte_carlo: bool,
}

impl SphereRule {
    pub fn new(n: usize, factor: usize, mc_points: usize, seed: u64, domain: Domain) -> SphereRule {
        let factor = factor.max(1);
        match (n, domain) {
            (1, Domain::HalfLinePos) => SphereRule::from_parts(1, vec![vec![1.0]], vec![1.0]),
            (1, Domain::HalfLineNeg) => SphereRule::from_parts(1, vec![vec![-1.0]], vec![1.0]),
            (1, _) => SphereRule::from_parts(1, vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0]),
            (2, _) => {
                let m = 256 * factor;
                let w = 2.0 * PI / m as f64;
                let nodes = (0..m)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / m as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect();
                SphereRule::from_parts(2, nodes, vec![w; m])
            }
            (3, _) => {
                let gl = gauss_legendre(32 * factor);
                let m = 64 * factor;
                let dphi = 2.0 * PI / m as f64;
                let mut nodes = Vec::with_capacity(gl.len() * m);
                let mut weights = Vec::with_capacity(gl.len() * m);
                for &(z, wz) in &gl {
                    let rho = (1.0 - z * z).sqrt();
                    for i in 0..m {
                        let phi = dphi * i as f64;
                        nodes.push(vec![rho * phi.cos(), rho * phi.sin(), z]);
                        weights.push(wz * dphi);
                    }
                }
                SphereRule::from_parts(3, nodes, weights)
            }
            _ => {
                let pairs = (mc_points * factor / 2).max(1);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut nodes = Vec::with_capacity(2 * pairs);
                for _ in 0..pairs {
                    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    let v: Vec<f64> = v.iter().map(|a| a / len).collect();
                    let neg: Vec<f64> = v.iter().map(|a| -a).collect();
                    nodes.push(v);
                    nodes.push(neg);
                }
                let w = sphere_area(n) / nodes.len() as f64;
                let weights = vec![w; nodes.len()];
                SphereRule { dim: n, nodes, weights, monte_carlo: true }
            }
        }
    }

    fn from_parts(dim: usize, nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> SphereRule {
        SphereRule { dim, nodes, weights, monte_carlo: false }
    }

    /// A cheap rule for inner convolution/ball quadratures.
    pub fn coarse(n: usize, seed: u64) -> SphereRule {
        match n {
            1 => SphereRule::new(1, 1, 0, seed, Domain::FullSpace),
            2 => {
                let m = 32;
                let nodes = (0..m)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / m as f64;
                        vec![t.cos(), t.sin()]
                    })
                    .collect();
                SphereRule::from_parts(2, nodes, vec![2.0 * PI / m as f64; m])
            }
            3 => {
                let gl = gauss_legendre(8);
                let m = 16;
                let dphi = 2.0 * PI / m as f64;
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for &(z, wz) in &gl {
                    let rho = (1.0 - z * z).sqrt();
                    for i in 0..m {
                        let phi = dphi * i as f64;
                        nodes.push(vec![rho * phi.cos(), rho * phi.sin(), z]);
                        weights.push(wz * dphi);
                    }
                }
                SphereRule::from_parts(3, nodes, weights)
            }
            _ => SphereRule::new(n, 1, 1 << 10, seed, Domain::FullSpace),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        self.weights.iter().for_each(|w| acc.add(*w));
        acc.value()
    }

    /// Weighted average of `f` over the rule, with the sample standard error
    /// for Monte Carlo rules (zero otherwise).
    pub fn mean_with_error(&self, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let vals: Vec<f64> = self.nodes.iter().map(|s| f(s)).collect();
        let total = self.total_weight();
        let mean = vals.iter().zip(&self.weights).map(|(v, w)| v * w).sum::<f64>() / total;
        if !self.monte_carlo {
            return (mean, 0.0);
        }
        // antithetic pairs are averaged before estimating the spread
        let pair_means: Vec<f64> = vals.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let m = pair_means.len() as f64;
        let var = pair_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        (mean, (var / m).sqrt())
    }
}

/// Outcome of a radial integral over `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Contribution beyond the truncation radius (octaves plus geometric extrapolation).
    pub tail: f64,
    pub divergent: bool,
}

impl IntegralEstimate {
    pub fn tail_fraction(&self) -> f64 {
        if self.value > 0.0 && self.value.is_finite() {
            self.tail / self.value
        } else {
            0.0
        }
    }
}

const MAX_TAIL_OCTAVES: usize = 64;
const GROWTH_RATIO: f64 = 1.05;
const LOG_RATIO: f64 = 0.999;

#[derive(Debug, Clone)]
pub struct RadialRule {
    pub r_max: f64,
    pub breakpoints: Vec<f64>,
    pub gl: Vec<(f64, f64)>,
}

impl RadialRule {
    /// `panels` log-spaced panels (two per octave) ending at `r_max`, plus `[0, r_min]`.
    pub fn new(r_max: f64, panels: usize, points_per_panel: usize) -> RadialRule {
        let panels = panels.max(2);
        let mut breakpoints = vec![0.0];
        let r_min = r_max * 2f64.powf(-(panels as f64) / 2.0);
        for i in 0..=panels {
            breakpoints.push(r_min * 2f64.powf(i as f64 / 2.0));
        }
        *breakpoints.last_mut().unwrap() = r_max;
        RadialRule { r_max, breakpoints, gl: gauss_legendre(points_per_panel) }
    }

    pub fn r_min(&self) -> f64 {
        self.breakpoints[1]
    }

    /// Panels of the fixed partition clipped to `[lo, hi]`; above `r_max` the
    /// partition continues with half-octave panels.
    fn panels_between(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for w in self.breakpoints.windows(2) {
            let (a, b) = (w[0].max(lo), w[1].min(hi));
            if b > a {
                out.push((a, b));
            }
        }
        let mut a = self.r_max.max(lo);
        while a < hi {
            let b = (a * 2f64.sqrt()).min(hi);
            out.push((a, b));
            a = b;
        }
        out
    }

    pub fn nodes_on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.gl.iter().map(move |&(x, w)| (mid + half * x, half * w))
    }

    fn sum_panels<G>(&self, g: &G, panels: &[(f64, f64)]) -> f64
    where
        G: Fn(f64) -> f64 + Sync,
    {
        let nodes: Vec<(f64, f64)> = panels.iter().flat_map(|&(a, b)| self.nodes_on(a, b)).collect();
        let vals: Vec<f64> = nodes.par_iter().map(|&(r, w)| w * g(r)).collect();
        pairwise_sum(&vals)
    }

    /// All nodes of the finite partition within `[lo, hi]` (no tail).
    pub fn nodes_between(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        self.panels_between(lo, hi)
            .into_iter()
            .flat_map(|(a, b)| self.nodes_on(a, b).collect::<Vec<_>>())
            .collect()
    }

    /// `∫_lo^hi g(r) dr` for a nonnegative integrand; `hi = ∞` triggers the
    /// octave-by-octave tail extension and divergence tests.
    pub fn integrate<G>(&self, g: &G, lo: f64, hi: f64) -> IntegralEstimate
    where
        G: Fn(f64) -> f64 + Sync,
    {
        let finite_hi = if hi.is_finite() { hi } else { self.r_max.max(lo) };
        let body = self.sum_panels(g, &self.panels_between(lo, finite_hi));
        if hi.is_finite() {
            return IntegralEstimate { value: body, tail: 0.0, divergent: false };
        }
        let mut total = body;
        let mut tail = 0.0;
        let mut r = finite_hi.max(self.r_min());
        let mut sums: Vec<f64> = Vec::new();
        let mut ratios: Vec<f64> = Vec::new();
        let divergent = |total: f64, tail: f64| IntegralEstimate { value: f64::INFINITY, tail: tail.max(total), divergent: true };
        for _ in 0..MAX_TAIL_OCTAVES {
            let mid = r * 2f64.sqrt();
            let s = self.sum_panels(g, &[(r, mid), (mid, 2.0 * r)]);
            r *= 2.0;
            total += s;
            tail += s;
            if !s.is_finite() {
                return divergent(total, tail);
            }
            if let Some(&prev) = sums.last() {
                if prev == 0.0 && s == 0.0 {
                    return IntegralEstimate { value: total, tail, divergent: false };
                }
                ratios.push(if prev > 0.0 { s / prev } else { f64::INFINITY });
            }
            sums.push(s);
            let n = ratios.len();
            if n >= 3 && ratios[n - 3..].iter().all(|&q| q > GROWTH_RATIO) {
                return divergent(total, tail);
            }
            if n >= 2 && ratios[n - 2..].iter().all(|&q| q >= LOG_RATIO) {
                return divergent(total, tail);
            }
            if total == 0.0 {
                continue;
            }
            if s < 1e-12 * total {
                return IntegralEstimate { value: total, tail, divergent: false };
            }
            if n >= 2 {
                let rho = ratios[n - 1];
                let drho = (ratios[n - 1] - ratios[n - 2]).abs();
                if rho < 1.0 {
                    let err = s * drho / (1.0 - rho).powi(2);
                    if err < 1e-10 * total {
                        let extra = s * rho / (1.0 - rho);
                        return IntegralEstimate { value: total + extra, tail: tail + extra, divergent: false };
                    }
                }
            }
        }
        // Budget exhausted: extrapolate with the last ratio if it is contracting.
        match ratios.last() {
            Some(&rho) if rho < 1.0 => {
                let s = *sums.last().unwrap();
                let extra = s * rho / (1.0 - rho);
                IntegralEstimate { value: total + extra, tail: tail + extra, divergent: false }
            }
            _ if tail == 0.0 => IntegralEstimate { value: total, tail, divergent: false },
            _ => divergent(total, tail),
        }
    }

    /// `sup_{lo ≤ r ≤ hi} g(r)` sampled on the nodes, with octave extension
    /// beyond `r_max` when `hi = ∞`. Returns `∞` for sustained growth.
    pub fn sup<G>(&self, g: &G, lo: f64, hi: f64) -> f64
    where
        G: Fn(f64) -> f64 + Sync,
    {
        let finite_hi = if hi.is_finite() { hi } else { self.r_max.max(lo) };
        let mut nodes: Vec<f64> = self.nodes_between(lo, finite_hi).into_iter().map(|(r, _)| r).collect();
        nodes.push(lo.max(self.r_min() * 1e-3));
        if hi.is_finite() {
            nodes.push(hi);
        }
        let mut best = nodes.par_iter().map(|&r| g(r)).reduce(|| 0.0, f64::max);
        if hi.is_finite() {
            return best;
        }
        let mut r = finite_hi.max(self.r_min());
        let mut prev: Option<f64> = None;
        let mut growth = 0;
        let mut quiet = 0;
        for _ in 0..MAX_TAIL_OCTAVES {
            let pts: Vec<f64> = (0..=16).map(|i| r * 2f64.powf(i as f64 / 16.0)).collect();
            let m = pts.par_iter().map(|&x| g(x)).reduce(|| 0.0, f64::max);
            r *= 2.0;
            if !m.is_finite() {
                return f64::INFINITY;
            }
            best = best.max(m);
            if let Some(p) = prev {
                if m > p * (1.0 + 1e-3) && m > 0.0 {
                    growth += 1;
                    quiet = 0;
                    if growth >= 3 {
                        return f64::INFINITY;
                    }
                } else {
                    growth = 0;
                    quiet += 1;
                    if quiet >= 4 {
                        break;
                    }
                }
            }
            prev = Some(m);
        }
        best
    }
}

/// Fixed-order pairwise summation.
/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Radial rule times sphere rule for one dimension/domain.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub dim: usize,
    pub domain: Domain,
    pub config: GridConfig,
    pub radial: RadialRule,
    pub sphere: SphereRule,
}

impl PolarGrid {
    pub fn new(dim: usize, config: GridConfig, domain: Domain) -> Result<PolarGrid> {
        if dim == 0 || dim > 8 {
            return Err(Error::InvalidCase(format!("dimension {dim} outside 1..=8")));
        }
        if domain != Domain::FullSpace && dim != 1 {
            return Err(Error::InvalidCase("half-line domains need N = 1".into()));
        }
        Ok(PolarGrid {
            dim,
            domain,
            config,
            radial: RadialRule::new(config.r_max, config.panels, config.points_per_panel),
            sphere: SphereRule::new(dim, config.sphere_factor, config.mc_points, config.seed, domain),
        })
    }

    pub fn default_for(dim: usize) -> PolarGrid {
        PolarGrid::new(dim, GridConfig::default(), Domain::FullSpace).expect("valid default grid")
    }

    pub fn with_domain(dim: usize, domain: Domain) -> Result<PolarGrid> {
        PolarGrid::new(dim, GridConfig::default(), domain)
    }

    pub fn refined(&self) -> PolarGrid {
        PolarGrid::new(self.dim, self.config.refined(), self.domain).expect("refined grid")
    }

    pub fn r_max(&self) -> f64 {
        self.config.r_max
    }

    pub fn sphere_measure(&self) -> f64 {
        self.sphere.total_weight()
    }

    /// `∫ h(x) dx` over the shell `lo < |x| < hi`. For `radial` integrands only
    /// the first sphere node is evaluated.
    pub fn integrate<H>(&self, h: &H, radial: bool, lo: f64, hi: f64) -> IntegralEstimate
    where
        H: Fn(&[f64]) -> f64 + Sync,
    {
        let n = self.dim;
        let area = self.sphere_measure();
        let sphere = &self.sphere;
        let g = |r: f64| {
            let jac = r.powi(n as i32 - 1);
            if jac == 0.0 {
                return 0.0;
            }
            let mut x = vec![0.0; n];
            if radial {
                for (xi, si) in x.iter_mut().zip(&sphere.nodes[0]) {
                    *xi = r * si;
                }
                return jac * area * h(&x);
            }
            let mut acc = 0.0;
            for (s, w) in sphere.nodes.iter().zip(&sphere.weights) {
                for (xi, si) in x.iter_mut().zip(s) {
                    *xi = r * si;
                }
                acc += w * h(&x);
            }
            jac * acc
        };
        self.radial.integrate(&g, lo, hi)
    }

    /// Sampled `sup |h|` over the shell.
    pub fn sup<H>(&self, h: &H, radial: bool, lo: f64, hi: f64) -> f64
    where
        H: Fn(&[f64]) -> f64 + Sync,
    {
        let n = self.dim;
        let sphere = &self.sphere;
        let g = |r: f64| {
            let mut x = vec![0.0; n];
            let nodes: &[Vec<f64>] = if radial { &sphere.nodes[..1] } else { &sphere.nodes };
            let mut best: f64 = 0.0;
            for s in nodes {
                for (xi, si) in x.iter_mut().zip(s) {
                    *xi = r * si;
                }
                let v = h(&x).abs();
                if v.is_nan() {
                    continue;
                }
                best = best.max(v);
            }
            best
        };
        self.radial.sup(&g, lo, hi)
    }
}
