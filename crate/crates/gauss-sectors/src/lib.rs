//! Variance of Gaussian prime angles in sectors.
//!
//! The crate enumerates prime ideals of Z[i] by norm, forms the weighted
//! angle counts ψ_{K,X}(θ), measures their variance across sectors of width
//! about 1/K, and compares it with the random-matrix prediction, the λ > 1
//! theorem and the refined formula with lower-order constants.

pub mod error;
pub mod ideal_stream;
pub mod predictions;
pub mod quadrature;
pub mod ratios_lab;
pub mod special_functions;
pub mod spectral;
pub mod summation;
pub mod windows;

pub use error::{CacheError, Error, Result};
