//! Symmetric tensors of derivatives `∇^k u`, stored on canonical multi-indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::tensor_dim;
use crate::jet::{factorial, multi_indices, Jet, MultiIndex};

use super::{fd_step, PolarGrid, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    pub dim: usize,
    pub order: usize,
    /// One entry per multi-index of order `k`, in the order of [`multi_indices`].
    pub entries: Vec<(MultiIndex, f64)>,
}

impl SymTensor {
    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries.iter().find(|(a, _)| a == alpha).map(|(_, v)| *v)
    }

    /// `|T|² = Σ_{|α|=k} (k!/α!) T_α²`: the Euclidean norm of the full tensor.
    pub fn magnitude(&self) -> f64 {
        let kf = factorial(self.order);
        self.entries
            .iter()
            .map(|(a, v)| kf / a.factorial() * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

impl ScalarField {
    /// `∇^k u(x)` in one pass: a single jet of order `k`, or per-entry finite differences.
    pub fn gradient(&self, x: &[f64], k: usize) -> Result<SymTensor> {
        let alphas = multi_indices(self.dim(), k);
        if k == 0 {
            return Ok(SymTensor { dim: self.dim(), order: 0, entries: vec![(alphas[0].clone(), self.value(x))] });
        }
        let entries = match self.jet(&Jet::seed(x, k)) {
            Some(j) => alphas.into_iter().map(|a| { let v = j.derivative(&a); (a, v) }).collect(),
            None => {
                if k > 4 {
                    return Err(Error::OrderTooHigh(k));
                }
                alphas
                    .into_iter()
                    .map(|a| self.partial_fd(x, &a, fd_step(k)).map(|v| (a, v)))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(SymTensor { dim: self.dim(), order: k, entries })
    }

    pub fn gradient_magnitude(&self, x: &[f64], k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(self.value(x).abs());
        }
        if let Some(j) = self.jet(&Jet::seed(x, k)) {
            // |T|² = Σ (k!/α!) (α! c_α)² = k! Σ α! c_α²
            let space = j.space().clone();
            let sum: f64 = space
                .monomials()
                .iter()
                .zip(j.coeffs())
                .filter(|(a, _)| a.order() == k)
                .map(|(a, c)| a.factorial() * c * c)
                .sum();
            return Ok((factorial(k) * sum).sqrt());
        }
        Ok(self.gradient(x, k)?.magnitude())
    }
}

/// `∇^k u` as a lazily evaluated field of symmetric tensors.
#[derive(Debug, Clone)]
pub struct TensorField {
    pub field: ScalarField,
    pub order: usize,
}

impl TensorField {
    pub fn at(&self, x: &[f64]) -> Result<SymTensor> {
        self.field.gradient(x, self.order)
    }

    pub fn magnitude_at(&self, x: &[f64]) -> f64 {
        self.field.gradient_magnitude(x, self.order).unwrap_or(f64::NAN)
    }

    pub fn entry_count(&self) -> usize {
        tensor_dim(self.order, self.field.dim())
    }

    pub fn is_radial_magnitude(&self) -> bool {
        self.field.is_radial()
    }

    /// Values at every node of the grid inside `|x| ≤ r_max`.
    pub fn sample(&self, grid: &PolarGrid) -> Result<Vec<(Vec<f64>, SymTensor)>> {
        use rayon::prelude::*;
        let radii: Vec<f64> = grid.radial.nodes_between(0.0, grid.r_max()).into_iter().map(|(r, _)| r).collect();
        let points: Vec<Vec<f64>> = radii
            .iter()
            .flat_map(|&r| grid.sphere.nodes.iter().map(move |s| s.iter().map(|a| a * r).collect::<Vec<f64>>()))
            .collect();
        points
            .into_par_iter()
            .map(|x| self.at(&x).map(|t| (x, t)))
            .collect()
    }
}

/// `∇^k u`; errors with `OrderTooHigh` when finite differences would be needed for `k > 4`.
pub fn gradient_k(u: &ScalarField, k: usize, grid: &PolarGrid) -> Result<TensorField> {
    if k > 4 && !u.has_oracle() {
        return Err(Error::OrderTooHigh(k));
    }
    if grid.dim != u.dim() {
        return Err(Error::InvalidCase(format!("grid dimension {} != field dimension {}", grid.dim, u.dim())));
    }
    Ok(TensorField { field: u.clone(), order: k })
}
