//! Numerical toolkit for the restricted fractional Laplacian on bounded
//! one- and two-dimensional domains.
//!
//! The crate discretizes `(-Δ)^s` acting on functions that vanish outside a
//! domain `Ω`, solves semilinear Dirichlet problems `(-Δ)^s u = f(u)`, and
//! measures how well computed solutions satisfy the fractional Pohozaev
//! identity, the fractional integration-by-parts formula and the scaling
//! structure of the half-Laplacian `(-Δ)^{s/2} u` near `∂Ω`.
//!
//! Module map:
//!
//! - [`geometry`]: intervals, disks and polar-star domains with distance,
//!   projection, normals and boundary quadrature.
//! - [`frac_operator`]: grid discretization, dense operator assembly, the
//!   adaptive pointwise oracle, the spectral half-Laplacian and an operator cache.
//! - [`solver`]: nonlinearities, direct and Newton solves.
//! - [`boundary_trace`]: `u/δ^s` extrapolation, gradient growth and the
//!   logarithmic boundary fit of `(-Δ)^{s/2} u`.
//! - [`pohozaev`]: identity residuals, supercritical classification, scaling
//!   diagnostics and the nonexistence-evidence scan.
//! - [`cli`]: configuration and command drivers behind the `fracpoh` binary.

pub mod boundary_trace;
pub mod cli;
pub mod error;
pub mod frac_operator;
pub mod geometry;
pub mod pohozaev;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use frac_operator::{
    assemble, half_laplacian, normalization_constant, AssemblyOptions, Discretization,
    FracOperator, PointwiseOracle, SolutionField, WholeSpaceField,
};
pub use geometry::{Domain, DomainSpec, Point};
pub use solver::{solve_linear, solve_semilinear, Nonlinearity, SolveOptions, SolveReport};

/// `Γ(x)` for real arguments.
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}
