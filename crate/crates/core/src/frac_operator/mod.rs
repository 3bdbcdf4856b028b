//! Discrete and pointwise forms of the restricted fractional Laplacian
//!
//! `(-Δ)^s u(x) = c_{n,s} PV∫ (u(x) - u(y)) / |x - y|^{n+2s} dy`, `u = 0` outside `Ω`,
//!
//! together with the whole-space half-Laplacian `(-Δ)^{s/2} u` computed spectrally.

mod assembly;
pub mod cache;
mod discretization;
mod field;
mod oracle;
mod spectral;
pub mod stencil;

pub use assembly::{assemble, AssemblyMeta, AssemblyOptions, FracOperator, ImageSource, Scheme};
pub use discretization::Discretization;
pub use field::{NodalInterpolant, SolutionField};
pub use oracle::{PointwiseOracle, DEFAULT_ORACLE_TOL};
pub use spectral::{half_laplacian, default_pad, WholeSpaceField};

use crate::error::{check_order, Error, Result};
use crate::gamma;

/// `c_{n,s} = s·4^s·Γ(n/2 + s) / (π^{n/2}·Γ(1 - s))`, the constant that makes the
/// Fourier symbol of the operator exactly `|ξ|^{2s}`.
pub fn normalization_constant(n: usize, s: f64) -> Result<f64> {
    check_order(s)?;
    if !(1..=2).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let nh = n as f64 / 2.0;
    Ok(s * 4f64.powf(s) * gamma(nh + s) / (std::f64::consts::PI.powf(nh) * gamma(1.0 - s)))
}

/// `(-Δ)^s (1 - |x|²)_+^s = 4^s Γ(1+s) Γ(n/2+s) / Γ(n/2)` on the unit ball.
pub fn torsion_constant(n: usize, s: f64) -> f64 {
    let nh = n as f64 / 2.0;
    4f64.powf(s) * gamma(1.0 + s) * gamma(nh + s) / gamma(nh)
}

/// `(-Δ)^s [(1 - |x|²)_+^s x_1] = μ x_1` on the unit ball, with μ returned here.
pub fn odd_mode_constant(n: usize, s: f64) -> f64 {
    let nh = n as f64 / 2.0;
    4f64.powf(s) * gamma(1.0 + s) * gamma(nh + 1.0 + s) / gamma(nh + 1.0)
}
