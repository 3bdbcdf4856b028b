//! Run configuration: a sectioned key-value (TOML) file.
//!
//! ```toml
//! [domain]
//! kind = "interval"          # interval | disk | polar_star
//! a = -1.0
//! b = 1.0
//!
//! [problem]
//! s = 0.5
//! nonlinearity = { kind = "constant", value = 1.0 }
//!
//! [grid]
//! h = 0.0009765625           # or: nodes = 2047 (per axis)
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Optional sections: `[solver]`, `[verify]`, `[scan]`; every key has a default
//! listed on [`RunConfig`]'s field types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary_trace::TraceWindow;
use crate::error::check_order;
use crate::geometry::{make_domain, DomainSpec, Point};
use crate::solver::{Nonlinearity, SolveOptions};

/// A configuration problem; the message names the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Optional; must match the domain's dimension when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub s: f64,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: Nonlinearity,
}

fn default_nonlinearity() -> Nonlinearity {
    Nonlinearity::Constant { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Box half-width; defaults to the domain extent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Half-Laplacian padding; defaults to 128 (1D) / 16 (2D).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pad: Option<f64>,
    #[serde(default = "default_node_cap")]
    pub node_cap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_node_cap() -> usize {
    4096
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes: None,
            h: None,
            half_width: None,
            pad: None,
            node_cap: default_node_cap(),
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Bound on `|relative Pohozaev residual|`.
    pub pohozaev_tol: f64,
    /// Bound on the relative error of `dI/dλ` against the boundary term.
    pub scaling_tol: f64,
    /// Bound on `|slope_in - slope_out| / |c₁q|`.
    pub log_slope_tol: f64,
    /// Allowed negative Cauchy–Schwarz margin, relative to `I_1`.
    pub cs_tol: f64,
    pub window: TraceWindow,
    /// Fit the log profile at every `log_stride`-th boundary node.
    pub log_stride: usize,
    /// Origin for `x·ν`; defaults to the domain center.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<Point>,
    pub lambdas: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            pohozaev_tol: 1e-3,
            scaling_tol: 0.1,
            log_slope_tol: 0.1,
            cs_tol: 1e-8,
            window: TraceWindow::default(),
            log_stride: 32,
            origin: None,
            lambdas: crate::pohozaev::default_lambdas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub p: Vec<f64>,
    /// Gap samples cover `[-gap_range, gap_range]`.
    pub gap_range: f64,
    pub gap_points: usize,
    pub tolerance_factor: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            p: vec![2.0, 3.0, 5.0],
            gap_range: 10.0,
            gap_points: 200,
            tolerance_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

fn err(field: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let domain = make_domain(&self.domain).map_err(|e| err("domain", e))?;
        let n = domain.dimension();
        check_order(self.problem.s).map_err(|e| err("problem.s", e))?;
        if let Some(m) = self.problem.n {
            if m != n {
                return Err(err("problem.n", format!("{m} does not match the domain dimension {n}")));
            }
        }
        self.problem
            .nonlinearity
            .validate()
            .map_err(|e| err("problem.nonlinearity", e))?;
        let g = &self.grid;
        match (g.nodes, g.h) {
            (Some(_), Some(_)) => return Err(err("grid", "give either nodes or h, not both")),
            (None, None) => return Err(err("grid", "one of nodes or h is required")),
            (Some(k), None) if k < 3 => return Err(err("grid.nodes", "at least 3 nodes per axis")),
            (None, Some(h)) if !(h > 0.0 && h.is_finite()) => {
                return Err(err("grid.h", "must be positive"))
            }
            _ => {}
        }
        if let Some(l) = g.half_width {
            if !(l.is_finite() && l >= domain.extent() * (1.0 - 1e-12)) {
                return Err(err(
                    "grid.half_width",
                    format!("{l} does not contain the domain (extent {})", domain.extent()),
                ));
            }
        }
        if let Some(p) = g.pad {
            if !(p.is_finite() && p >= 2.0) {
                return Err(err("grid.pad", "must be at least 2"));
            }
        }
        if g.node_cap == 0 {
            return Err(err("grid.node_cap", "must be positive"));
        }
        let per_axis = self.nodes_per_axis_estimate(&domain);
        let unknowns_bound = per_axis.pow(n as u32);
        if n == 1 && per_axis > g.node_cap {
            return Err(err(
                "grid",
                format!("{per_axis} nodes exceed grid.node_cap = {}", g.node_cap),
            ));
        }
        let _ = unknowns_bound;
        self.solver.validate().map_err(|e| err("solver", e))?;
        let v = &self.verify;
        for (name, val) in [
            ("verify.pohozaev_tol", v.pohozaev_tol),
            ("verify.scaling_tol", v.scaling_tol),
            ("verify.log_slope_tol", v.log_slope_tol),
            ("verify.cs_tol", v.cs_tol),
        ] {
            if !(val > 0.0 && val.is_finite()) {
                return Err(err(name, "tolerances must be positive"));
            }
        }
        if !(v.window.k1 > 0.0 && v.window.k2 > v.window.k1 && v.window.step > 0.0) {
            return Err(err("verify.window", "need 0 < k1 < k2 and step > 0"));
        }
        if v.lambdas.len() < 2 || v.lambdas.iter().any(|l| !(*l > 1.0)) {
            return Err(err("verify.lambdas", "need at least two values > 1"));
        }
        if v.log_stride == 0 {
            return Err(err("verify.log_stride", "must be positive"));
        }
        if let Some(o) = v.origin {
            if o.iter().any(|c| !c.is_finite()) {
                return Err(err("verify.origin", "must be finite"));
            }
        }
        let sc = &self.scan;
        if sc.p.iter().any(|p| !(p.is_finite() && *p >= 1.0)) {
            return Err(err("scan.p", "exponents must be ≥ 1"));
        }
        if !(sc.gap_range > 0.0) || sc.gap_points == 0 {
            return Err(err("scan", "gap_range and gap_points must be positive"));
        }
        if !(sc.tolerance_factor > 0.0) {
            return Err(err("scan.tolerance_factor", "must be positive"));
        }
        Ok(())
    }

    fn nodes_per_axis_estimate(&self, domain: &crate::geometry::Domain) -> usize {
        let l = self.grid.half_width.unwrap_or(domain.extent());
        match (self.grid.nodes, self.grid.h) {
            (Some(k), _) => k,
            (None, Some(h)) => (2.0 * l / h).round().max(1.0) as usize - 1,
            _ => 0,
        }
    }
}
