//! Independent pointwise evaluation of `(-Δ)^s g(x)` by adaptive quadrature.
//!
//! In symmetric form
//! `(-Δ)^s g(x) = c_{n,s} ∫_{S^{n-1}/±} ∫_0^∞ (2g(x) - g(x+re) - g(x-re)) r^{-1-2s} dr de`.
//! On `[0, ρ0]`, `ρ0 = δ(x)/2`, the second-order Taylor term `-r² ∂²_e g(x)` is
//! subtracted from the integrand and its closed-form integral added back (the remainder on a tiny
//! inner ball is estimated from a second difference); the
//! rest is integrated adaptively with breakpoints at the crossings of `∂Ω`, and
//! the region where both `x ± re` lie outside `Ω` is integrated analytically.

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::quadrature::adaptive;

use super::{normalization_constant, SolutionField};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-8;
const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy)]
pub struct PointwiseOracle {
    n: usize,
    s: f64,
    c: f64,
    abs_tol: f64,
}

impl PointwiseOracle {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        Ok(Self {
            n,
            s,
            c: normalization_constant(n, s)?,
            abs_tol: DEFAULT_ORACLE_TOL,
        })
    }

    pub fn with_tolerance(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn tolerance(&self) -> f64 {
        self.abs_tol
    }

    /// `(-Δ)^s g(x)` for a function `g` supported in `Ω̄`.
    pub fn apply(&self, domain: &Domain, g: impl Fn(Point) -> f64, x: Point) -> Result<f64> {
        if domain.dimension() != self.n {
            return Err(Error::InvalidArgument(format!(
                "oracle built for n = {}, domain has n = {}",
                self.n,
                domain.dimension()
            )));
        }
        let delta = domain.distance_and_projection(x).distance;
        let rho0 = 0.5 * delta;
        if self.n == 1 {
            let (v, _) = self.ray(domain, &g, x, [1.0, 0.0], rho0, self.abs_tol / self.c)?;
            return Ok(self.c * v);
        }
        let inner_tol = self.abs_tol / (self.c * 10.0 * std::f64::consts::PI);
        let mut failure: Option<(f64, f64)> = None;
        let est = adaptive(
            |theta| {
                let e = [theta.cos(), theta.sin()];
                match self.ray(domain, &g, x, e, rho0, inner_tol) {
                    Ok((v, _)) => v,
                    Err(Error::QuadratureNonConvergence { achieved, requested }) => {
                        failure.get_or_insert((achieved, requested));
                        0.0
                    }
                    Err(_) => 0.0,
                }
            },
            &[0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
            self.abs_tol / self.c,
            MAX_SEGMENTS,
        );
        if let Some((achieved, requested)) = failure {
            return Err(Error::QuadratureNonConvergence { achieved, requested });
        }
        if !est.converged {
            return Err(Error::QuadratureNonConvergence {
                achieved: est.error * self.c,
                requested: self.abs_tol,
            });
        }
        Ok(self.c * est.value)
    }

    /// Applies the oracle to the continuum representation of a discrete field.
    /// Requires `δ(x) > 2h`.
    pub fn apply_field(&self, u: &SolutionField, x: Point) -> Result<f64> {
        let disc = u.discretization();
        let delta = disc.domain().distance_and_projection(x).distance;
        if !(delta > 2.0 * disc.h()) || !disc.domain().contains(x) {
            return Err(Error::InvalidArgument(format!(
                "oracle point must satisfy δ(x) > 2h (δ = {delta:.3e}, h = {:.3e})",
                disc.h()
            )));
        }
        self.apply(disc.domain(), |y| u.value(y), x)
    }

    /// `∫_0^∞ (2g(x) - g(x+re) - g(x-re)) r^{-1-2s} dr`.
    fn ray(
        &self,
        domain: &Domain,
        g: &impl Fn(Point) -> f64,
        x: Point,
        e: Point,
        rho0: f64,
        tol: f64,
    ) -> Result<(f64, f64)> {
        let s = self.s;
        let at = |r: f64| [x[0] + r * e[0], x[1] + r * e[1]];
        let g0 = g(x);
        let kernel = |r: f64| r.powf(-1.0 - 2.0 * s);
        let mut breaks = vec![0.0];
        let mut reach: f64 = 0.0;
        for t in domain.line_crossings(x, e) {
            let r = t.abs();
            reach = reach.max(r);
            if r > 0.0 {
                breaks.push(r);
            }
        }
        let mut total = 0.0;
        let mut error = 0.0;
        let mut fail = None;
        let mut rho0 = rho0;
        if rho0 > 0.0 {
            let eta = 0.25 * rho0;
            let d2 = (-g(at(2.0 * eta)) + 16.0 * g(at(eta)) - 30.0 * g0 + 16.0 * g(at(-eta))
                - g(at(-2.0 * eta)))
                / (12.0 * eta * eta);
            let cut = 1e-2 * rho0;
            let near = adaptive(
                |r| (2.0 * g0 - g(at(r)) - g(at(-r)) + r * r * d2) * kernel(r),
                &[cut, rho0],
                0.25 * tol,
                MAX_SEGMENTS,
            );
            // on [0, cut] the integrand is (d2 - ∂²g) r^{1-2s} to leading order;
            // the second difference at `cut` supplies -∂²g
            let inner = (2.0 * g0 - g(at(cut)) - g(at(-cut))) / (cut * cut) + d2;
            total += near.value - d2 * rho0.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s)
                + inner * cut.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
            error += near.error;
            if !near.converged {
                fail = Some(near.error);
            }
        } else {
            // x on or outside ∂Ω: no Taylor ball, start slightly off the point
            rho0 = 1e-12;
        }
        let end = reach.max(rho0);
        breaks.push(rho0);
        breaks.push(end);
        breaks.retain(|&b| b >= rho0 && b <= end);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        if end > rho0 {
            let mid = adaptive(
                |r| (2.0 * g0 - g(at(r)) - g(at(-r))) * kernel(r),
                &breaks,
                0.75 * tol,
                MAX_SEGMENTS,
            );
            total += mid.value;
            error += mid.error;
            if !mid.converged {
                fail = Some(error);
            }
        }
        total += 2.0 * g0 * end.powf(-2.0 * s) / (2.0 * s);
        if let Some(achieved) = fail {
            return Err(Error::QuadratureNonConvergence {
                achieved: achieved * self.c,
                requested: tol * self.c,
            });
        }
        Ok((total, error))
    }
}
