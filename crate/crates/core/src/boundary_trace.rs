//! Boundary behaviour of solutions: the trace `q = u/δ^s` on `∂Ω`, the gradient
//! growth `|∇u| δ^{1-s}`, and the logarithmic profile of `(-Δ)^{s/2} u`
//! across `∂Ω`.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_operator::{Discretization, SolutionField, WholeSpaceField};
use crate::geometry::{dot, sub, Domain, Point};

/// Probe window `[k1·h, k2·h]` along the inward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceWindow {
    pub k1: f64,
    pub k2: f64,
    /// Probe spacing in units of `h`.
    pub step: f64,
    pub degree: usize,
}

impl Default for TraceWindow {
    fn default() -> Self {
        Self {
            k1: 4.0,
            k2: 20.0,
            step: 1.0,
            degree: 2,
        }
    }
}

impl TraceWindow {
    fn offsets(&self) -> Result<Vec<f64>> {
        if !(self.k1 > 0.0 && self.k2 > self.k1 && self.step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "trace window needs 0 < k1 < k2 and step > 0 (k1 = {}, k2 = {}, step = {})",
                self.k1, self.k2, self.step
            )));
        }
        let count = ((self.k2 - self.k1) / self.step + 1e-9).floor() as usize + 1;
        if count < self.degree + 2 {
            return Err(Error::InvalidArgument(format!(
                "trace window holds {count} samples, degree {} needs at least {}",
                self.degree,
                self.degree + 2
            )));
        }
        Ok((0..count).map(|k| self.k1 + k as f64 * self.step).collect())
    }

    /// The same window shifted by `cells` grid cells.
    pub fn shifted(&self, cells: f64) -> Self {
        Self {
            k1: self.k1 + cells,
            k2: self.k2 + cells,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub param: f64,
    pub point: Point,
    pub normal: Point,
    pub weight: f64,
    /// Extrapolated `lim u/δ^s`.
    pub q: f64,
    /// Largest deviation of the samples from the fitted polynomial.
    pub residual: f64,
    pub samples: usize,
    /// The window left `Ω`; excluded from surface integrals.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub nodes: Vec<TraceNode>,
    /// Log-log modulus-of-continuity slope of `q` along `∂Ω`; a diagnostic
    /// estimate only (`None` in 1D or when `q` is numerically constant).
    pub holder_alpha: Option<f64>,
    pub window: TraceWindow,
}

impl BoundaryTrace {
    pub fn values(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.q).collect()
    }

    pub fn flagged(&self) -> usize {
        self.nodes.iter().filter(|n| n.flagged).count()
    }

    pub fn max_residual(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| !n.flagged)
            .map(|n| n.residual)
            .fold(0.0, f64::max)
    }
}

const REACH_SLACK: f64 = 1e-3;

/// Extrapolates `u/δ^s` to every boundary node by a least-squares polynomial
/// in the normal distance over the probe window.
pub fn trace(u: &SolutionField, window: &TraceWindow) -> Result<BoundaryTrace> {
    let disc = u.discretization();
    let domain = disc.domain();
    let h = disc.h();
    let s = u.s();
    let offsets: Vec<f64> = window.offsets()?.iter().map(|k| k * h).collect();
    let nodes: Vec<TraceNode> = domain
        .boundary_nodes()
        .par_iter()
        .map(|b| {
            let probes = probe_line(domain, b.point, b.normal, &offsets, window.degree);
            let flagged = probes.is_none();
            let (ts, rs): (Vec<f64>, Vec<f64>) = probes
                .unwrap_or_default()
                .into_iter()
                .map(|(t, y, delta)| (t, u.value(y) / delta.powf(s)))
                .unzip();
            let (q, residual) = if flagged {
                (0.0, f64::NAN)
            } else {
                poly_fit_at_zero(&ts, &rs, window.degree)
            };
            TraceNode {
                param: b.param,
                point: b.point,
                normal: b.normal,
                weight: b.weight,
                q,
                residual,
                samples: ts.len(),
                flagged,
            }
        })
        .collect();
    let bad = nodes.iter().filter(|n| n.flagged).count();
    if bad == nodes.len() {
        return Err(window_error(window, h));
    }
    if bad > 0 {
        warn!("boundary trace: {bad} node(s) flagged, the probe window leaves the domain");
    }
    let holder_alpha = if disc.dimension() == 2 {
        holder_estimate(&nodes)
    } else {
        None
    };
    Ok(BoundaryTrace {
        nodes,
        holder_alpha,
        window: *window,
    })
}

/// Probe points `(t, z - tν, δ)` along the inward normal. Probes past the
/// reach of `z` are dropped; `None` when a probe leaves the domain or too few
/// remain for a fit of the given degree.
fn probe_line(
    domain: &Domain,
    z: Point,
    normal: Point,
    offsets: &[f64],
    degree: usize,
) -> Option<Vec<(f64, Point, f64)>> {
    let mut probes = Vec::with_capacity(offsets.len());
    for &t in offsets {
        let y = [z[0] - t * normal[0], z[1] - t * normal[1]];
        if !domain.contains(y) {
            return None;
        }
        let delta = domain.distance_and_projection(y).distance;
        // past the reach of z the nearest boundary point is elsewhere
        if delta < (1.0 - REACH_SLACK) * t {
            break;
        }
        probes.push((t, y, delta));
    }
    (probes.len() >= degree + 2).then_some(probes)
}

fn window_error(window: &TraceWindow, h: f64) -> Error {
    Error::InvalidGrid(format!(
        "trace window [{}h, {}h] = [{:.3e}, {:.3e}] leaves the domain at every boundary node; \
         refine the grid or narrow verify.window",
        window.k1,
        window.k2,
        window.k1 * h,
        window.k2 * h
    ))
}

/// Fails when no boundary node has a usable probe window on this grid.
pub fn check_window(disc: &Discretization, window: &TraceWindow) -> Result<()> {
    let h = disc.h();
    let offsets: Vec<f64> = window.offsets()?.iter().map(|k| k * h).collect();
    let domain = disc.domain();
    if domain
        .boundary_nodes()
        .par_iter()
        .any(|b| probe_line(domain, b.point, b.normal, &offsets, window.degree).is_some())
    {
        Ok(())
    } else {
        Err(window_error(window, h))
    }
}

/// Least-squares polynomial of the given degree; returns its value at 0 and the
/// largest sample residual.
fn poly_fit_at_zero(t: &[f64], r: &[f64], degree: usize) -> (f64, f64) {
    let scale = t.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let m = degree + 1;
    let mut ata = vec![0.0; m * m];
    let mut atb = vec![0.0; m];
    for (&ti, &ri) in t.iter().zip(r) {
        let x = ti / scale;
        let mut pow = vec![1.0; m];
        for k in 1..m {
            pow[k] = pow[k - 1] * x;
        }
        for a in 0..m {
            atb[a] += pow[a] * ri;
            for b in 0..m {
                ata[a * m + b] += pow[a] * pow[b];
            }
        }
    }
    let coef = solve_small(&mut ata, &mut atb, m);
    let residual = t
        .iter()
        .zip(r)
        .map(|(&ti, &ri)| {
            let x = ti / scale;
            let p = coef.iter().rev().fold(0.0, |acc, c| acc * x + c);
            (ri - p).abs()
        })
        .fold(0.0, f64::max);
    (coef[0], residual)
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_small(a: &mut [f64], b: &mut [f64], m: usize) -> Vec<f64> {
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..m {
                a.swap(col * m + k, piv * m + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * m + col];
        if d == 0.0 {
            continue;
        }
        for row in col + 1..m {
            let f = a[row * m + col] / d;
            for k in col..m {
                a[row * m + k] -= f * a[col * m + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in row + 1..m {
            acc -= a[row * m + k] * x[k];
        }
        let d = a[row * m + row];
        x[row] = if d == 0.0 { 0.0 } else { acc / d };
    }
    x
}

fn holder_estimate(nodes: &[TraceNode]) -> Option<f64> {
    let m = nodes.len();
    let scale = nodes.iter().fold(0.0f64, |a, n| a.max(n.q.abs()));
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut gap = 1;
    while gap <= m / 4 {
        let mut osc: f64 = 0.0;
        let mut arc = 0.0;
        for i in 0..m {
            let j = (i + gap) % m;
            if nodes[i].flagged || nodes[j].flagged {
                continue;
            }
            osc = osc.max((nodes[i].q - nodes[j].q).abs());
            arc += (0..gap).map(|k| nodes[(i + k) % m].weight).sum::<f64>();
        }
        if osc > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            xs.push((arc / m as f64).ln());
            ys.push(osc.ln());
        }
        gap *= 2;
    }
    if xs.len() < 2 {
        return None;
    }
    Some(line_fit(&xs, &ys).1)
}

/// Least-squares line `y ≈ a + b x`; returns `(a, b, max residual)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let res = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - a - b * xi).abs())
        .fold(0.0, f64::max);
    (a, b, res)
}

/// `∫_{∂Ω} q² (x - origin)·ν dσ` over the unflagged nodes.
pub fn surface_functional(trace: &BoundaryTrace, origin: Point) -> f64 {
    surface_pairing(trace, trace, |b| dot(sub(b.point, origin), b.normal))
}

/// `∫_{∂Ω} q_u q_v g(z) dσ` for two traces on the same boundary nodes.
pub fn surface_pairing(
    a: &BoundaryTrace,
    b: &BoundaryTrace,
    g: impl Fn(&TraceNode) -> f64,
) -> f64 {
    a.nodes
        .iter()
        .zip(&b.nodes)
        .filter(|(x, y)| !x.flagged && !y.flagged)
        .map(|(x, y)| x.weight * x.q * y.q * g(x))
        .sum()
}

/// `max |∇u|·δ^{1-s}` over nodes with `δ > 2h`, gradients by centered
/// differences of the nodal values (zero outside `Ω`).
pub fn gradient_growth(u: &SolutionField) -> f64 {
    let disc = u.discretization();
    let domain = disc.domain();
    let h = disc.h();
    let s = u.s();
    let vals = u.values();
    let get = |k: i64, l: i64| disc.unknown_at(k, l).map_or(0.0, |j| vals[j]);
    disc.points()
        .iter()
        .zip(disc.grid_index())
        .filter_map(|(&x, &[k, l])| {
            let delta = domain.distance_and_projection(x).distance;
            if delta <= 2.0 * h {
                return None;
            }
            let gx = (get(k + 1, l) - get(k - 1, l)) / (2.0 * h);
            let gy = if disc.dimension() == 2 {
                (get(k, l + 1) - get(k, l - 1)) / (2.0 * h)
            } else {
                0.0
            };
            Some((gx * gx + gy * gy).sqrt() * delta.powf(1.0 - s))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogProbe {
    pub param: f64,
    pub point: Point,
    pub slope_inside: f64,
    pub slope_outside: f64,
    pub intercept_inside: f64,
    pub intercept_outside: f64,
    /// Common log coefficient `c₁·q(x*)` (mean of the two slopes).
    pub c1q: f64,
    /// Intercept jump across `∂Ω` divided by `c₁·q(x*)`.
    pub c2: f64,
    /// Largest fit residual on either side.
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub probes: Vec<LogProbe>,
    /// `max |slope_in - slope_out| / |c₁q|` over the probes.
    pub slope_mismatch: f64,
    pub window: TraceWindow,
}

/// Fits `w ≈ a + b·log t` along the normal at every `stride`-th boundary node,
/// separately at `z - tν` (inside) and `z + tν` (outside), `t` in the window
/// measured in units of the spacing of `w`.
pub fn log_singularity_fit(
    w: &WholeSpaceField,
    u: &SolutionField,
    window: &TraceWindow,
    stride: usize,
) -> Result<LogFit> {
    let domain = u.discretization().domain();
    if w.edge_ratio() > 1e-3 {
        warn!(
            "log fit: half-Laplacian edge contamination {:.2e} exceeds 1e-3",
            w.edge_ratio()
        );
    }
    let offsets: Vec<f64> = window.offsets()?.iter().map(|k| k * w.h()).collect();
    let logs: Vec<f64> = offsets.iter().map(|t| t.ln()).collect();
    let spread = logs.last().unwrap() - logs[0];
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let var = logs.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / logs.len() as f64;
    // condition number of the normalized [1, log t] design
    let cond = (1.0 + mean * mean + var + ((1.0 + mean * mean + var).powi(2) - 4.0 * var).sqrt())
        / (1.0 + mean * mean + var - ((1.0 + mean * mean + var).powi(2) - 4.0 * var).sqrt());
    if spread < 0.5 || !cond.is_finite() || cond > 1e10 {
        return Err(Error::IllConditionedFit(format!(
            "log-range {spread:.3} of the probe window is too narrow (condition {cond:.2e})"
        )));
    }
    let stride = stride.max(1);
    let probes: Vec<LogProbe> = domain
        .boundary_nodes()
        .iter()
        .step_by(stride)
        .map(|b| {
            let sample = |sign: f64| -> Vec<f64> {
                offsets
                    .iter()
                    .map(|t| w.interpolate([b.point[0] + sign * t * b.normal[0], b.point[1] + sign * t * b.normal[1]]))
                    .collect()
            };
            let (ai, bi, ri) = line_fit(&logs, &sample(-1.0));
            let (ao, bo, ro) = line_fit(&logs, &sample(1.0));
            let c1q = 0.5 * (bi + bo);
            let c2 = if c1q.abs() > 0.0 { (ai - ao) / c1q } else { 0.0 };
            LogProbe {
                param: b.param,
                point: b.point,
                slope_inside: bi,
                slope_outside: bo,
                intercept_inside: ai,
                intercept_outside: ao,
                c1q,
                c2,
                remainder: ri.max(ro),
            }
        })
        .collect();
    let slope_mismatch = probes
        .iter()
        .map(|p| {
            if p.c1q == 0.0 {
                0.0
            } else {
                (p.slope_inside - p.slope_outside).abs() / p.c1q.abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(LogFit {
        probes,
        slope_mismatch,
        window: *window,
    })
}
