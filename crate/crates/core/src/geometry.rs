//! Computational domains: intervals, disks and polar-star domains
//! `{c + ρ(cos θ, sin θ) : ρ < r(θ)}` with a trigonometric-polynomial radius.
//!
//! Points are stored as `[f64; 2]`; one-dimensional domains use the first
//! component only and keep the second at zero.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const SEEDS: usize = 4096;

fn default_boundary_nodes() -> usize {
    256
}

/// Declarative description of a domain, as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Interval {
        a: f64,
        b: f64,
    },
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_boundary_nodes")]
        boundary_nodes: usize,
    },
    /// `r(θ) = r0 + Σ_k cos[k-1]·cos(kθ) + sin[k-1]·sin(kθ)`.
    PolarStar {
        #[serde(default)]
        center: [f64; 2],
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        #[serde(default = "default_boundary_nodes")]
        boundary_nodes: usize,
    },
}

impl DomainSpec {
    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// The same domain shifted by `shift`.
    pub fn translated(&self, shift: Point) -> DomainSpec {
        match self.clone() {
            DomainSpec::Interval { a, b } => DomainSpec::Interval {
                a: a + shift[0],
                b: b + shift[0],
            },
            DomainSpec::Disk {
                center,
                radius,
                boundary_nodes,
            } => DomainSpec::Disk {
                center: add(center, shift),
                radius,
                boundary_nodes,
            },
            DomainSpec::PolarStar {
                center,
                r0,
                cos,
                sin,
                boundary_nodes,
            } => DomainSpec::PolarStar {
                center: add(center, shift),
                r0,
                cos,
                sin,
                boundary_nodes,
            },
        }
    }

    /// Stable 64-bit digest of the description.
    pub fn digest(&self) -> u64 {
        let json = serde_json::to_vec(self).expect("domain spec serializes");
        let hash = Sha256::digest(&json);
        u64::from_le_bytes(hash[..8].try_into().unwrap())
    }
}

/// One boundary quadrature node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNode {
    /// Boundary parameter: 0/1 for the interval endpoints, the polar angle otherwise.
    pub param: f64,
    pub point: Point,
    /// Outward unit normal.
    pub normal: Point,
    /// Surface weight `dσ`.
    pub weight: f64,
}

/// Result of a nearest-boundary-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub distance: f64,
    pub nearest: Point,
    pub param: f64,
}

#[derive(Debug, Clone)]
enum Shape {
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
    PolarStar { center: Point, radius: TrigRadius },
}

#[derive(Debug, Clone)]
struct TrigRadius {
    r0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigRadius {
    /// `(r, r', r'')` at angle `t`.
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let mut r = self.r0;
        let mut dr = 0.0;
        let mut d2r = 0.0;
        let terms = self.cos.len().max(self.sin.len());
        for k in 1..=terms {
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            let kf = k as f64;
            let (sk, ck) = (kf * t).sin_cos();
            r += a * ck + b * sk;
            dr += kf * (-a * sk + b * ck);
            d2r += -kf * kf * (a * ck + b * sk);
        }
        (r, dr, d2r)
    }
}

/// An immutable computational domain with its boundary quadrature.
#[derive(Debug, Clone)]
pub struct Domain {
    spec: DomainSpec,
    shape: Shape,
    boundary: Vec<BoundaryNode>,
    extent: f64,
    seeds: Vec<(f64, Point)>,
}

/// Builds a domain from its description, validating the parameters.
pub fn make_domain(spec: &DomainSpec) -> Result<Domain> {
    Domain::new(spec.clone())
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Self> {
        let shape = match &spec {
            DomainSpec::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite()) || b <= a {
                    return Err(Error::InvalidDomain(format!(
                        "interval needs finite a < b, got [{a}, {b}]"
                    )));
                }
                Shape::Interval { a: *a, b: *b }
            }
            DomainSpec::Disk {
                center,
                radius,
                boundary_nodes,
            } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "disk radius must be positive, got {radius}"
                    )));
                }
                check_center(center)?;
                check_nodes(*boundary_nodes)?;
                Shape::Disk {
                    center: *center,
                    radius: *radius,
                }
            }
            DomainSpec::PolarStar {
                center,
                r0,
                cos,
                sin,
                boundary_nodes,
            } => {
                check_center(center)?;
                check_nodes(*boundary_nodes)?;
                if !cos.iter().chain(sin.iter()).chain([r0]).all(|c| c.is_finite()) {
                    return Err(Error::InvalidDomain(
                        "polar-star coefficients must be finite".into(),
                    ));
                }
                let radius = TrigRadius {
                    r0: *r0,
                    cos: cos.clone(),
                    sin: sin.clone(),
                };
                let r_min = lower_bound_radius(&radius);
                if r_min <= 0.0 {
                    return Err(Error::InvalidDomain(format!(
                        "polar-star radius r(θ) is not strictly positive (lower bound {r_min:.3e})"
                    )));
                }
                Shape::PolarStar {
                    center: *center,
                    radius,
                }
            }
        };
        let mut domain = Domain {
            spec,
            shape,
            boundary: Vec::new(),
            extent: 0.0,
            seeds: Vec::new(),
        };
        domain.build_boundary();
        Ok(domain)
    }

    fn build_boundary(&mut self) {
        match &self.shape {
            Shape::Interval { a, b } => {
                self.boundary = vec![
                    BoundaryNode {
                        param: 0.0,
                        point: [*a, 0.0],
                        normal: [-1.0, 0.0],
                        weight: 1.0,
                    },
                    BoundaryNode {
                        param: 1.0,
                        point: [*b, 0.0],
                        normal: [1.0, 0.0],
                        weight: 1.0,
                    },
                ];
                self.extent = 0.5 * (b - a);
            }
            _ => {
                let m = match self.spec {
                    DomainSpec::Disk { boundary_nodes, .. }
                    | DomainSpec::PolarStar { boundary_nodes, .. } => boundary_nodes,
                    DomainSpec::Interval { .. } => unreachable!(),
                };
                let dt = 2.0 * PI / m as f64;
                self.boundary = (0..m)
                    .map(|j| {
                        let t = j as f64 * dt;
                        let (point, tangent) = self.curve(t);
                        let speed = norm(tangent);
                        BoundaryNode {
                            param: t,
                            point,
                            normal: [tangent[1] / speed, -tangent[0] / speed],
                            weight: speed * dt,
                        }
                    })
                    .collect();
                let dt = 2.0 * PI / SEEDS as f64;
                self.seeds = (0..SEEDS)
                    .map(|j| {
                        let t = j as f64 * dt;
                        (t, self.curve(t).0)
                    })
                    .collect();
                let c = self.center();
                let max_seed = self
                    .seeds
                    .iter()
                    .map(|(_, z)| norm(sub(*z, c)))
                    .fold(0.0, f64::max);
                self.extent = match &self.shape {
                    Shape::Disk { radius, .. } => *radius,
                    // chord sagitta bound between seeds
                    _ => max_seed * (1.0 + dt * dt),
                };
            }
        }
    }

    /// Boundary point and its (non-normalized) tangent at parameter `t` for 2D shapes.
    fn curve(&self, t: f64) -> (Point, Point) {
        let (r, dr, _) = self.radius_derivs(t);
        let (st, ct) = t.sin_cos();
        let c = self.center();
        (
            [c[0] + r * ct, c[1] + r * st],
            [dr * ct - r * st, dr * st + r * ct],
        )
    }

    fn radius_derivs(&self, t: f64) -> (f64, f64, f64) {
        match &self.shape {
            Shape::Disk { radius, .. } => (*radius, 0.0, 0.0),
            Shape::PolarStar { radius, .. } => radius.eval(t),
            Shape::Interval { a, b } => (0.5 * (b - a), 0.0, 0.0),
        }
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    /// Reference point of the domain: interval midpoint, disk center, or the polar origin.
    pub fn center(&self) -> Point {
        match &self.shape {
            Shape::Interval { a, b } => [0.5 * (a + b), 0.0],
            Shape::Disk { center, .. } | Shape::PolarStar { center, .. } => *center,
        }
    }

    /// Upper bound on the distance from [`Domain::center`] to the boundary.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn boundary_nodes(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn boundary_measure(&self) -> f64 {
        self.boundary.iter().map(|b| b.weight).sum()
    }

    /// Boundary point at parameter `t` (0/1 selects the interval endpoints).
    pub fn boundary_point(&self, t: f64) -> Point {
        match &self.shape {
            Shape::Interval { a, b } => {
                if t < 0.5 {
                    [*a, 0.0]
                } else {
                    [*b, 0.0]
                }
            }
            _ => self.curve(t).0,
        }
    }

    /// Outward unit normal at parameter `t`.
    pub fn boundary_normal(&self, t: f64) -> Point {
        match &self.shape {
            Shape::Interval { .. } => {
                if t < 0.5 {
                    [-1.0, 0.0]
                } else {
                    [1.0, 0.0]
                }
            }
            _ => {
                let (_, tan) = self.curve(t);
                let speed = norm(tan);
                [tan[1] / speed, -tan[0] / speed]
            }
        }
    }

    /// `ρ(x)²` where `ρ` is the gauge of the domain about its center
    /// (`ρ < 1` inside, `ρ = 1` on the boundary).
    pub fn gauge_squared(&self, x: Point) -> f64 {
        match &self.shape {
            Shape::Interval { a, b } => {
                let half = 0.5 * (b - a);
                let t = (x[0] - 0.5 * (a + b)) / half;
                t * t
            }
            Shape::Disk { center, radius } => norm_sq(sub(x, *center)) / (radius * radius),
            Shape::PolarStar { center, radius } => {
                let d = sub(x, *center);
                let r2 = norm_sq(d);
                if r2 == 0.0 {
                    return 0.0;
                }
                let (r, _, _) = radius.eval(d[1].atan2(d[0]));
                r2 / (r * r)
            }
        }
    }

    /// Boundary profile `1 - ρ(x)²`: positive inside, zero on `∂Ω`.
    pub fn profile(&self, x: Point) -> f64 {
        1.0 - self.gauge_squared(x)
    }

    /// Gradient of [`Domain::profile`].
    pub fn profile_gradient(&self, x: Point) -> Point {
        match &self.shape {
            Shape::Interval { a, b } => {
                let half = 0.5 * (b - a);
                [-2.0 * (x[0] - 0.5 * (a + b)) / (half * half), 0.0]
            }
            Shape::Disk { center, radius } => {
                let d = sub(x, *center);
                let k = -2.0 / (radius * radius);
                [k * d[0], k * d[1]]
            }
            Shape::PolarStar { center, radius } => {
                let d = sub(x, *center);
                let r2 = norm_sq(d);
                if r2 == 0.0 {
                    return [0.0, 0.0];
                }
                let (r, dr, _) = radius.eval(d[1].atan2(d[0]));
                // ∇(|d|²/r²) = 2d/r² - 2|d|² r'/r³ ∇θ, with ∇θ = (-d_y, d_x)/|d|²
                let g = [
                    2.0 * d[0] / (r * r) + 2.0 * dr / (r * r * r) * d[1],
                    2.0 * d[1] / (r * r) - 2.0 * dr / (r * r * r) * d[0],
                ];
                [-g[0], -g[1]]
            }
        }
    }

    pub fn contains(&self, x: Point) -> bool {
        self.gauge_squared(x) < 1.0
    }

    /// Distance to `∂Ω` and the nearest boundary point. Ties go to the
    /// smallest boundary parameter.
    pub fn distance_and_projection(&self, x: Point) -> Projection {
        match &self.shape {
            Shape::Interval { a, b } => {
                let da = (x[0] - a).abs();
                let db = (x[0] - b).abs();
                if da <= db {
                    Projection {
                        distance: da,
                        nearest: [*a, 0.0],
                        param: 0.0,
                    }
                } else {
                    Projection {
                        distance: db,
                        nearest: [*b, 0.0],
                        param: 1.0,
                    }
                }
            }
            Shape::Disk { center, radius } => {
                let d = sub(x, *center);
                let r = norm(d);
                let param = if r == 0.0 {
                    0.0
                } else {
                    d[1].atan2(d[0]).rem_euclid(2.0 * PI)
                };
                let (s, c) = param.sin_cos();
                Projection {
                    distance: (r - radius).abs(),
                    nearest: [center[0] + radius * c, center[1] + radius * s],
                    param,
                }
            }
            Shape::PolarStar { .. } => self.project_polar(x),
        }
    }

    fn project_polar(&self, x: Point) -> Projection {
        let dist2: Vec<f64> = self
            .seeds
            .iter()
            .map(|(_, z)| norm_sq(sub(*z, x)))
            .collect();
        let m = dist2.len();
        let best = dist2.iter().cloned().fold(f64::INFINITY, f64::min);
        let step = 2.0 * PI / m as f64;
        // any local minimum close to the best seed is a candidate
        let slack = {
            let spacing = self.extent * step * 4.0;
            (best.sqrt() + spacing).powi(2)
        };
        let mut out: Option<Projection> = None;
        for k in 0..m {
            let prev = dist2[(k + m - 1) % m];
            let next = dist2[(k + 1) % m];
            if dist2[k] > slack || dist2[k] > prev || dist2[k] > next {
                continue;
            }
            let t = self.refine_projection(x, self.seeds[k].0, step);
            let z = self.curve(t).0;
            let cand = Projection {
                distance: norm(sub(z, x)),
                nearest: z,
                param: t.rem_euclid(2.0 * PI),
            };
            out = match out {
                None => Some(cand),
                Some(o) => {
                    let tie = (cand.distance - o.distance).abs() <= 1e-13 * (1.0 + o.distance);
                    if cand.distance < o.distance && !tie || tie && cand.param < o.param {
                        Some(cand)
                    } else {
                        Some(o)
                    }
                }
            };
        }
        out.expect("at least one seed is a local minimum")
    }

    /// Newton iteration on `(z(t) - x)·z'(t) = 0`, safeguarded by bisection inside
    /// `[t0 - step, t0 + step]`.
    fn refine_projection(&self, x: Point, t0: f64, step: f64) -> f64 {
        let dg = |t: f64| {
            let (r, dr, d2r) = self.radius_derivs(t);
            let (st, ct) = t.sin_cos();
            let c = self.center();
            let z = [c[0] + r * ct, c[1] + r * st];
            let z1 = [dr * ct - r * st, dr * st + r * ct];
            let z2 = [
                d2r * ct - 2.0 * dr * st - r * ct,
                d2r * st + 2.0 * dr * ct - r * st,
            ];
            let e = sub(z, x);
            (dot(e, z1), dot(z1, z1) + dot(e, z2))
        };
        let (mut lo, mut hi) = (t0 - step, t0 + step);
        let (glo, ghi) = (dg(lo).0, dg(hi).0);
        let bracketed = glo <= 0.0 && ghi >= 0.0;
        let mut t = t0;
        for _ in 0..100 {
            let (g, h) = dg(t);
            if g == 0.0 {
                break;
            }
            if bracketed {
                if g < 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
            }
            let mut next = if h > 0.0 { t - g / h } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let done = (next - t).abs() < 1e-13;
            t = next;
            if done || (hi - lo) < 1e-14 {
                break;
            }
        }
        t
    }

    /// `min_z (z - origin)·ν(z)` over the boundary nodes; positive iff the
    /// domain is strictly star-shaped about `origin` (to quadrature resolution).
    pub fn star_shapedness_margin(&self, origin: Point) -> f64 {
        self.boundary
            .iter()
            .map(|b| dot(sub(b.point, origin), b.normal))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sorted parameters `t` at which the line `x + t·e` crosses `∂Ω`.
    pub fn line_crossings(&self, x: Point, e: Point) -> Vec<f64> {
        match &self.shape {
            Shape::Interval { a, b } => {
                let mut t = vec![(a - x[0]) / e[0], (b - x[0]) / e[0]];
                t.sort_by(f64::total_cmp);
                t
            }
            Shape::Disk { center, radius } => {
                let d = sub(x, *center);
                let bq = dot(d, e);
                let cq = norm_sq(d) - radius * radius;
                let disc = bq * bq - cq;
                if disc < 0.0 {
                    return Vec::new();
                }
                let sq = disc.sqrt();
                vec![-bq - sq, -bq + sq]
            }
            Shape::PolarStar { .. } => {
                let c = self.center();
                let reach = norm(sub(x, c)) + self.extent * 1.01;
                let steps = 1024;
                let dt = 2.0 * reach / steps as f64;
                let phi = |t: f64| self.gauge_squared([x[0] + t * e[0], x[1] + t * e[1]]) - 1.0;
                let mut out = Vec::new();
                let mut t0 = -reach;
                let mut f0 = phi(t0);
                for k in 1..=steps {
                    let t1 = -reach + k as f64 * dt;
                    let f1 = phi(t1);
                    if f0 == 0.0 {
                        out.push(t0);
                    } else if f0 * f1 < 0.0 {
                        let (mut lo, mut hi, mut flo) = (t0, t1, f0);
                        for _ in 0..80 {
                            let mid = 0.5 * (lo + hi);
                            let fm = phi(mid);
                            if fm * flo <= 0.0 {
                                hi = mid;
                            } else {
                                lo = mid;
                                flo = fm;
                            }
                        }
                        out.push(0.5 * (lo + hi));
                    }
                    t0 = t1;
                    f0 = f1;
                }
                out
            }
        }
    }

    /// Distance from [`Domain::center`] to `∂Ω` along the unit direction `e`.
    pub fn ray_length(&self, e: Point) -> f64 {
        match &self.shape {
            Shape::Interval { a, b } => 0.5 * (b - a),
            Shape::Disk { radius, .. } => *radius,
            Shape::PolarStar { radius, .. } => radius.eval(e[1].atan2(e[0])).0,
        }
    }

    /// The same domain translated by `shift`.
    pub fn translated(&self, shift: Point) -> Result<Domain> {
        Domain::new(self.spec.translated(shift))
    }
}

fn check_center(c: &[f64; 2]) -> Result<()> {
    if c.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidDomain("center must be finite".into()))
    }
}

fn check_nodes(m: usize) -> Result<()> {
    if m >= 8 {
        Ok(())
    } else {
        Err(Error::InvalidDomain(format!(
            "need at least 8 boundary nodes, got {m}"
        )))
    }
}

/// Rigorous-enough lower bound on `min r(θ)`: dense sampling minus the
/// worst-case change between samples.
fn lower_bound_radius(r: &TrigRadius) -> f64 {
    let m = 8192;
    let dt = 2.0 * PI / m as f64;
    let mut min_r = f64::INFINITY;
    let mut max_dr: f64 = 0.0;
    for j in 0..m {
        let (v, d, _) = r.eval(j as f64 * dt);
        min_r = min_r.min(v);
        max_dr = max_dr.max(d.abs());
    }
    min_r - 0.5 * dt * max_dr
}

pub(crate) fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm_sq(a: Point) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: Point) -> f64 {
    norm_sq(a).sqrt()
}
