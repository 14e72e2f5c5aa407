//! Numerical laboratory for weighted Hardy–Sobolev–Morrey growth-transfer
//! inequalities: weighted norms, the canonical polynomial `π_u`, 1-D Hardy
//! kernels and end-to-end verification of the multidimensional inequalities.

pub mod error;
pub mod exponents;
pub mod fields;
pub mod hardy1d;
pub mod jet;
pub mod polyproj;
pub mod verifier;
pub mod wnorms;

pub use error::{Error, Result};
