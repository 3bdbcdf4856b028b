//! The five subcommands. Each returns an exit code:
//! 0 success, 1 configuration error, 2 solver non-convergence,
//! 3 tolerance exceeded / scan assertion failed / numerical failure.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use serde::Serialize;

use super::config::{ConfigError, RunConfig};
use super::output::{write_json, write_scan_csv, write_solution_csv, write_trace_csv};
use crate::boundary_trace::{self, gradient_growth, log_singularity_fit, trace};
use crate::error::Error;
use crate::frac_operator::{
    cache, default_pad, half_laplacian, AssemblyOptions, Discretization, FracOperator,
    PointwiseOracle, SolutionField,
};
use crate::geometry::{make_domain, Domain, Point};
use crate::pohozaev::{
    nonexistence_scan, pohozaev_residual, scaling_diagnostics, ScanOptions,
};
use crate::solver::{
    jacobian_check, power_seed, solve_semilinear, torsion, Nonlinearity, SolveReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

enum Failure {
    Config(String),
    NonConvergence(Box<SolveReport>),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDomain(_)
            | Error::InvalidOrder(_)
            | Error::UnsupportedDimension(_)
            | Error::InvalidGrid(_)
            | Error::GridTooLarge { .. }
            | Error::NotStarShaped(_) => Failure::Config(e.to_string()),
            Error::NonConvergence(rep) => Failure::NonConvergence(rep),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}

fn finish(r: Result<i32, Failure>) -> i32 {
    match r {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::NonConvergence(rep)) => {
            eprintln!(
                "error: Newton did not converge in {} iterations (residual {:.3e}, threshold {:.3e})",
                rep.iterations, rep.residual_norm, rep.tolerance
            );
            EXIT_NONCONVERGENCE
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            EXIT_TOLERANCE
        }
    }
}

/// Domain, operator and output directory shared by every command.
struct Setup {
    cfg: RunConfig,
    domain: Arc<Domain>,
    op: FracOperator,
    out: PathBuf,
}

impl Setup {
    /// `traced` commands also need the probe window to fit inside the domain.
    fn new(cfg: RunConfig, out_override: Option<&Path>, traced: bool) -> Result<Self, Failure> {
        cfg.validate()?;
        let domain = Arc::new(make_domain(&cfg.domain)?);
        let l = cfg.grid.half_width.unwrap_or(domain.extent());
        let disc = match (cfg.grid.nodes, cfg.grid.h) {
            (Some(k), _) => Discretization::new(domain.clone(), k, l)?,
            (None, Some(h)) => Discretization::with_spacing(domain.clone(), h, l)?,
            _ => unreachable!("validated"),
        };
        let disc = Arc::new(disc);
        if traced {
            boundary_trace::check_window(&disc, &cfg.verify.window)?;
        }
        let opts = AssemblyOptions {
            node_cap: cfg.grid.node_cap,
            ..AssemblyOptions::default()
        };
        if disc.len() > opts.node_cap {
            return Err(Error::GridTooLarge {
                nodes: disc.len(),
                cap: opts.node_cap,
                bytes: (disc.len() * disc.len() * 8) as u64,
            }
            .into());
        }
        let s = cfg.problem.s;
        let op = match &cfg.grid.cache_dir {
            Some(dir) => cache::load_or_assemble(dir, disc, s, &opts)?,
            None => FracOperator::assemble(disc, s, &opts)?,
        };
        info!("assembled {} unknowns, h = {:.6e}", op.len(), op.discretization().h());
        let out = out_override
            .map(Path::to_path_buf)
            .unwrap_or_else(|| cfg.output.dir.clone());
        std::fs::create_dir_all(&out)?;
        std::fs::write(out.join("resolved_config.toml"), cfg.to_toml())?;
        Ok(Self {
            cfg,
            domain,
            op,
            out,
        })
    }

    fn origin(&self) -> Point {
        self.cfg.verify.origin.unwrap_or(self.domain.center())
    }

    fn pad(&self) -> f64 {
        self.cfg
            .grid
            .pad
            .unwrap_or_else(|| default_pad(self.domain.dimension()))
    }

    fn write<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        write_json(&self.out.join(name), value)?;
        Ok(())
    }

    /// Newton solve with a seed suited to the nonlinearity; writes `u.csv`
    /// and `solve_report.json` (also on non-convergence).
    fn solve(&self) -> Result<SolutionField, Failure> {
        let f = &self.cfg.problem.nonlinearity;
        let seed = initial_guess(&self.op, f)?;
        match solve_semilinear(&self.op, f, &seed, &self.cfg.solver) {
            Ok((u, rep)) => {
                write_solution_csv(&self.out.join("u.csv"), &u)?;
                self.write("solve_report.json", &rep)?;
                Ok(u)
            }
            Err(Error::NonConvergence(rep)) => {
                self.write("solve_report.json", &rep)?;
                Err(Failure::NonConvergence(rep))
            }
            Err(e) => Err(e.into()),
        }
    }
}

fn initial_guess(op: &FracOperator, f: &Nonlinearity) -> Result<Vec<f64>, Error> {
    match f {
        Nonlinearity::Power { .. } => Ok(power_seed(op, f)?.0),
        _ if f.is_affine() => Ok(vec![0.0; op.len()]),
        _ => Ok(torsion(op)?.into_values()),
    }
}

pub fn cmd_solve(cfg: RunConfig, out: Option<&Path>) -> i32 {
    finish((|| {
        let setup = Setup::new(cfg, out, false)?;
        setup.solve()?;
        Ok(EXIT_OK)
    })())
}

#[derive(Serialize)]
struct Verdict {
    pohozaev_relative_residual: f64,
    pohozaev_tol: f64,
    scaling_relative_error: f64,
    scaling_tol: f64,
    cauchy_schwarz_margin: f64,
    cs_tol: f64,
    log_slope_mismatch: f64,
    log_slope_tol: f64,
    pass: bool,
}

pub fn cmd_verify(cfg: RunConfig, out: Option<&Path>) -> i32 {
    finish((|| {
        let setup = Setup::new(cfg, out, true)?;
        let u = setup.solve()?;
        let v = &setup.cfg.verify;
        let origin = setup.origin();
        let poh = pohozaev_residual(&u, &setup.cfg.problem.nonlinearity, origin, &v.window)?;
        write_trace_csv(&setup.out.join("trace.csv"), &poh.trace)?;
        setup.write("pohozaev.json", &poh)?;
        let w = half_laplacian(&u, setup.pad())?;
        let scaling = scaling_diagnostics(&u, &setup.op, &w, &poh.trace, origin, &v.lambdas)?;
        setup.write("scaling.json", &scaling)?;
        let log_fit = log_singularity_fit(&w, &u, &v.window, v.log_stride)?;
        setup.write("logfit.json", &log_fit)?;
        let mut verdict = Verdict {
            pohozaev_relative_residual: poh.relative_residual,
            pohozaev_tol: v.pohozaev_tol,
            scaling_relative_error: scaling.relative_error,
            scaling_tol: v.scaling_tol,
            cauchy_schwarz_margin: scaling.min_margin_relative,
            cs_tol: v.cs_tol,
            log_slope_mismatch: log_fit.slope_mismatch,
            log_slope_tol: v.log_slope_tol,
            pass: false,
        };
        verdict.pass = poh.relative_residual.abs() <= v.pohozaev_tol
            && scaling.relative_error <= v.scaling_tol
            && scaling.min_margin_relative >= -v.cs_tol
            && log_fit.slope_mismatch <= v.log_slope_tol;
        setup.write("verdict.json", &verdict)?;
        println!(
            "pohozaev {:.3e} (tol {:.1e}), scaling {:.3e} (tol {:.1e}), cauchy-schwarz {:.3e}, log slopes {:.3e} (tol {:.1e})",
            poh.relative_residual,
            v.pohozaev_tol,
            scaling.relative_error,
            v.scaling_tol,
            scaling.min_margin_relative,
            log_fit.slope_mismatch,
            v.log_slope_tol
        );
        Ok(if verdict.pass { EXIT_OK } else { EXIT_TOLERANCE })
    })())
}

pub fn cmd_scan(cfg: RunConfig, out: Option<&Path>) -> i32 {
    finish((|| {
        if cfg.scan.p.is_empty() {
            return Err(Failure::Config("scan.p: empty exponent grid".into()));
        }
        let setup = Setup::new(cfg, out, true)?;
        let sc = &setup.cfg.scan;
        let opts = ScanOptions {
            gap_range: sc.gap_range,
            gap_points: sc.gap_points,
            tolerance_factor: sc.tolerance_factor,
            solve: setup.cfg.solver.clone(),
            window: setup.cfg.verify.window,
        };
        let table = nonexistence_scan(&setup.op, &sc.p, setup.origin(), &opts)?;
        write_scan_csv(&setup.out.join("scan.csv"), &table)?;
        setup.write("scan.json", &table)?;
        for r in &table.rows {
            println!(
                "p = {}: {:?}, {:?}, defect {:?} (tol {:.3e})",
                r.p, r.classification, r.outcome, r.defect_relative, r.tolerance
            );
        }
        Ok(if table.assertion_holds {
            EXIT_OK
        } else {
            EXIT_TOLERANCE
        })
    })())
}

#[derive(Serialize)]
struct TraceSummary {
    nodes: usize,
    flagged: usize,
    max_fit_residual: f64,
    holder_alpha: Option<f64>,
    gradient_growth: f64,
}

pub fn cmd_trace(cfg: RunConfig, out: Option<&Path>) -> i32 {
    finish((|| {
        let setup = Setup::new(cfg, out, true)?;
        let u = setup.solve()?;
        let tr = trace(&u, &setup.cfg.verify.window)?;
        write_trace_csv(&setup.out.join("trace.csv"), &tr)?;
        setup.write(
            "trace.json",
            &TraceSummary {
                nodes: tr.nodes.len(),
                flagged: tr.flagged(),
                max_fit_residual: tr.max_residual(),
                holder_alpha: tr.holder_alpha,
                gradient_growth: gradient_growth(&u),
            },
        )?;
        Ok(EXIT_OK)
    })())
}

#[derive(Serialize)]
struct OracleSample {
    point: Point,
    discrete: f64,
    oracle: f64,
}

#[derive(Serialize)]
struct Diagnostics {
    unknowns: usize,
    h: f64,
    constant: f64,
    symmetry_defect: f64,
    min_eigenvalue: f64,
    jacobian_error: f64,
    oracle_samples: Vec<OracleSample>,
    plancherel_gap: f64,
    edge_ratio: f64,
}

/// Operator health: symmetry, definiteness, agreement with the pointwise
/// oracle on the torsion field, Jacobian check, Plancherel gap.
pub fn cmd_diagnostics(cfg: RunConfig, out: Option<&Path>) -> i32 {
    finish((|| {
        let setup = Setup::new(cfg, out, false)?;
        let op = &setup.op;
        let disc = op.discretization();
        let tau = torsion(op)?;
        let oracle = PointwiseOracle::new(disc.dimension(), op.s())?;
        let a_tau = op.apply(tau.values());
        let mut oracle_samples = Vec::new();
        // a handful of nodes well inside the domain
        let inner: Vec<usize> = (0..disc.len())
            .filter(|&i| setup.domain.distance_and_projection(disc.points()[i]).distance > 0.25 * setup.domain.extent())
            .collect();
        for k in 0..inner.len().min(5) {
            let i = inner[k * inner.len() / inner.len().min(5)];
            let x = disc.points()[i];
            oracle_samples.push(OracleSample {
                point: x,
                discrete: a_tau[i],
                oracle: oracle.apply_field(&tau, x)?,
            });
        }
        let f = &setup.cfg.problem.nonlinearity;
        let w = half_laplacian(&tau, setup.pad())?;
        let energy = disc.cell_volume() * op.bilinear(tau.values(), tau.values());
        let diag = Diagnostics {
            unknowns: op.len(),
            h: disc.h(),
            constant: op.constant(),
            symmetry_defect: op.symmetry_defect(),
            min_eigenvalue: op.min_eigenvalue()?,
            jacobian_error: jacobian_check(op, f, tau.values()),
            oracle_samples,
            plancherel_gap: (w.l2_norm_sq() - energy).abs() / energy,
            edge_ratio: w.edge_ratio(),
        };
        setup.write("diagnostics.json", &diag)?;
        Ok(EXIT_OK)
    })())
}
