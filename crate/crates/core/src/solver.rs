//! Semilinear Dirichlet problems `(-Δ)^s u = f(u)` in `Ω`, `u = 0` outside.

use faer::linalg::solvers::Solve;
use faer::Mat;
use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_operator::{FracOperator, SolutionField};

/// Right-hand sides `f(u)` with derivative and antiderivative `F(u) = ∫_0^u f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Constant { value: f64 },
    Linear { lambda: f64 },
    /// `|u|^{p-1} u`, `p ≥ 1`.
    Power { p: f64 },
    /// Piecewise-linear `f` through `(u[k], f[k])`, extended linearly.
    Table { u: Vec<f64>, f: Vec<f64> },
}

impl Nonlinearity {
    pub fn validate(&self) -> Result<()> {
        match self {
            Nonlinearity::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidArgument("constant value must be finite".into()))
            }
            Nonlinearity::Linear { lambda } if !lambda.is_finite() => {
                Err(Error::InvalidArgument("lambda must be finite".into()))
            }
            Nonlinearity::Power { p } if !(p.is_finite() && *p >= 1.0) => Err(
                Error::InvalidArgument(format!("power p = {p} must be ≥ 1 (locally Lipschitz)")),
            ),
            Nonlinearity::Table { u, f } => {
                if u.len() < 2 || u.len() != f.len() {
                    return Err(Error::InvalidArgument(
                        "table needs at least two (u, f) pairs of equal length".into(),
                    ));
                }
                if !u.iter().chain(f).all(|v| v.is_finite()) {
                    return Err(Error::InvalidArgument("table entries must be finite".into()));
                }
                if u.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument(
                        "table abscissae must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Constant { value } => *value,
            Nonlinearity::Linear { lambda } => lambda * u,
            Nonlinearity::Power { p } => u.abs().powf(p - 1.0) * u,
            Nonlinearity::Table { u: tu, f } => {
                let k = segment(tu, u);
                let t = (u - tu[k]) / (tu[k + 1] - tu[k]);
                f[k] + t * (f[k + 1] - f[k])
            }
        }
    }

    pub fn df(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Constant { .. } => 0.0,
            Nonlinearity::Linear { lambda } => *lambda,
            Nonlinearity::Power { p } => p * u.abs().powf(p - 1.0),
            Nonlinearity::Table { u: tu, f } => {
                let k = segment(tu, u);
                (f[k + 1] - f[k]) / (tu[k + 1] - tu[k])
            }
        }
    }

    /// `F(u) = ∫_0^u f(t) dt`.
    pub fn antiderivative(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Constant { value } => value * u,
            Nonlinearity::Linear { lambda } => 0.5 * lambda * u * u,
            Nonlinearity::Power { p } => u.abs().powf(p + 1.0) / (p + 1.0),
            Nonlinearity::Table { .. } => self.table_primitive(u) - self.table_primitive(0.0),
        }
    }

    /// Primitive of the piecewise-linear table measured from `u[0]`.
    fn table_primitive(&self, x: f64) -> f64 {
        let Nonlinearity::Table { u, .. } = self else {
            unreachable!()
        };
        let trap = |a: f64, b: f64| 0.5 * (b - a) * (self.f(a) + self.f(b));
        if x <= u[0] {
            return -trap(x, u[0]);
        }
        let mut acc = 0.0;
        for w in u.windows(2) {
            if x <= w[1] {
                return acc + trap(w[0], x);
            }
            acc += trap(w[0], w[1]);
        }
        acc + trap(*u.last().unwrap(), x)
    }

    /// Whether `f` ignores `u` (the problem is linear with fixed right side).
    pub fn is_constant(&self) -> bool {
        matches!(self, Nonlinearity::Constant { .. })
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Nonlinearity::Constant { .. } | Nonlinearity::Linear { .. })
    }

    /// Worst relative mismatch between a central difference of `F` and `f`.
    pub fn antiderivative_defect(&self, samples: &[f64]) -> f64 {
        samples
            .iter()
            .map(|&u| {
                let eta = 1e-5 * u.abs().max(1.0);
                let fd = (self.antiderivative(u + eta) - self.antiderivative(u - eta)) / (2.0 * eta);
                let f = self.f(u);
                (fd - f).abs() / f.abs().max(1e-300).max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

fn segment(tu: &[f64], u: f64) -> usize {
    let last = tu.len() - 2;
    match tu.iter().position(|&t| t > u) {
        Some(0) | None if u < tu[0] => 0,
        None => last,
        Some(k) => (k - 1).min(last),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Stop when `‖A u - f(u)‖ ≤ tolerance · max(‖A u0‖, ‖f(u0)‖)`.
    pub tolerance: f64,
    /// Initial step length of every Newton update.
    pub damping: f64,
    /// Line search gives up below this step length.
    pub min_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-9,
            damping: 1.0,
            min_step: 1.0 / 1024.0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument("damping must lie in (0, 1]".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.damping) {
            return Err(Error::InvalidArgument("min_step must lie in (0, damping]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Nontrivial,
    Trivial,
    NonConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub outcome: Outcome,
    pub iterations: usize,
    /// Final `‖A u - f(u)‖` (Euclidean over the unknowns).
    pub residual_norm: f64,
    /// Absolute stopping threshold that was applied.
    pub tolerance: f64,
    pub residual_history: Vec<f64>,
    pub damping_history: Vec<f64>,
    pub solution_norm: f64,
    pub min_value: f64,
    pub max_value: f64,
}

/// Solves `A u = rhs` by Cholesky; checks `‖A u - rhs‖ ≤ 1e-10 ‖rhs‖`.
pub fn solve_linear(op: &FracOperator, rhs: &[f64]) -> Result<SolutionField> {
    if let Some(i) = rhs.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite right-hand side at node {i}")));
    }
    let mut u = op.solve(rhs)?;
    let norm_rhs = norm(rhs);
    for _ in 0..2 {
        let r: Vec<f64> = op.apply(&u).iter().zip(rhs).map(|(a, b)| b - a).collect();
        if norm(&r) <= 1e-10 * norm_rhs {
            return SolutionField::new(op.discretization_arc(), op.s(), u);
        }
        // one step of iterative refinement before giving up
        let du = op.solve(&r)?;
        for (a, b) in u.iter_mut().zip(du) {
            *a += b;
        }
    }
    let r: Vec<f64> = op.apply(&u).iter().zip(rhs).map(|(a, b)| b - a).collect();
    let rel = norm(&r) / norm_rhs;
    if rel <= 1e-10 {
        SolutionField::new(op.discretization_arc(), op.s(), u)
    } else {
        Err(Error::SingularMatrix(format!(
            "direct solve left relative residual {rel:.3e} > 1e-10"
        )))
    }
}

/// Solution of `A τ = 1`.
pub fn torsion(op: &FracOperator) -> Result<SolutionField> {
    solve_linear(op, &vec![1.0; op.len()])
}

fn residual(op: &FracOperator, f: &Nonlinearity, u: &[f64]) -> Vec<f64> {
    op.apply(u).iter().zip(u).map(|(a, v)| a - f.f(*v)).collect()
}

/// Newton iteration on `G(u) = A u - f(u)` with Jacobian `A - diag f'(u)` and
/// a backtracking line search that only accepts decreasing `‖G‖`.
///
/// Budget exhaustion returns [`Error::NonConvergence`]: evidence only, never a
/// statement that no solution exists.
pub fn solve_semilinear(
    op: &FracOperator,
    f: &Nonlinearity,
    u0: &[f64],
    opts: &SolveOptions,
) -> Result<(SolutionField, SolveReport)> {
    f.validate()?;
    opts.validate()?;
    if u0.len() != op.len() || u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "initial guess must be finite with one value per unknown".into(),
        ));
    }
    let scale = norm(&op.apply(u0)).max(norm(&u0.iter().map(|v| f.f(*v)).collect::<Vec<_>>()));
    let threshold = opts.tolerance * scale;
    let mut u = u0.to_vec();
    let mut g = residual(op, f, &u);
    let mut gnorm = norm(&g);
    let mut history = vec![gnorm];
    let mut damping = Vec::new();
    let mut iterations = 0;
    let mut converged = gnorm <= threshold;
    let n = op.len();
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let jac = Mat::from_fn(n, n, |i, j| {
            let a = op.entry(i, j);
            if i == j {
                a - f.df(u[i])
            } else {
                a
            }
        });
        let mut step = Mat::from_fn(n, 1, |i, _| -g[i]);
        jac.partial_piv_lu().solve_in_place(step.as_mut());
        let dir: Vec<f64> = (0..n).map(|i| step[(i, 0)]).collect();
        if dir.iter().any(|v| !v.is_finite()) {
            debug!("Newton: singular Jacobian at iteration {iterations}");
            break;
        }
        let mut t = opts.damping;
        let mut accepted = false;
        while t >= opts.min_step {
            let trial: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let gt = residual(op, f, &trial);
            let nt = norm(&gt);
            if nt < gnorm {
                u = trial;
                g = gt;
                gnorm = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            debug!("Newton: line search stalled at iteration {iterations}");
            break;
        }
        damping.push(t);
        history.push(gnorm);
        converged = gnorm <= threshold;
    }
    let field = SolutionField::new(op.discretization_arc(), op.s(), u)?;
    let solution_norm = field.norm();
    let outcome = if !converged {
        Outcome::NonConverged
    } else if solution_norm <= 1e-12 * torsion(op)?.norm() {
        Outcome::Trivial
    } else {
        Outcome::Nontrivial
    };
    let report = SolveReport {
        converged,
        outcome,
        iterations,
        residual_norm: gnorm,
        tolerance: threshold,
        residual_history: history,
        damping_history: damping,
        solution_norm,
        min_value: field.values().iter().cloned().fold(f64::INFINITY, f64::min),
        max_value: field.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    };
    if converged {
        Ok((field, report))
    } else {
        Err(Error::NonConvergence(Box::new(report)))
    }
}

/// Initial guess `t·τ` for power nonlinearities: `τ` the torsion solution,
/// `t` minimizing the relative residual `‖G(tτ)‖ / (t‖Aτ‖)` over a log grid
/// on `[1e-3, 1e3]`.
pub fn power_seed(op: &FracOperator, f: &Nonlinearity) -> Result<(Vec<f64>, f64)> {
    let tau = torsion(op)?;
    let a_tau = norm(&op.apply(tau.values()));
    let mut best = (f64::INFINITY, 1.0);
    for k in 0..=240 {
        let t = 10f64.powf(-3.0 + 6.0 * k as f64 / 240.0);
        let trial: Vec<f64> = tau.values().iter().map(|v| t * v).collect();
        let r = norm(&residual(op, f, &trial)) / (t * a_tau);
        if r < best.0 {
            best = (r, t);
        }
    }
    let t = best.1;
    Ok((tau.values().iter().map(|v| t * v).collect(), t))
}

/// Worst relative error between the Jacobian action `(A - diag f'(u)) d` and
/// central differences of `G` along 10 random directions (step `1e-6·scale`).
pub fn jacobian_check(op: &FracOperator, f: &Nonlinearity, u: &[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let scale = u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let eta = 1e-6 * scale;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let d: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ad = op.apply(&d);
        let jd: Vec<f64> = ad.iter().zip(&d).zip(u).map(|((a, di), ui)| a - f.df(*ui) * di).collect();
        // G(u+ηd) - G(u-ηd) = 2ηAd - (f(u+ηd) - f(u-ηd)); the linear part is exact
        let fd: Vec<f64> = ad
            .iter()
            .zip(&d)
            .zip(u)
            .map(|((a, di), ui)| a - (f.f(ui + eta * di) - f.f(ui - eta * di)) / (2.0 * eta))
            .collect();
        let diff: Vec<f64> = fd.iter().zip(&jd).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&jd));
    }
    worst
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
