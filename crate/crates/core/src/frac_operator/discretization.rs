use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};

/// Uniform grid on the box `center ± L` with `N` nodes per axis at
/// `center - L + k·h`, `k = 1..=N`, `h = 2L/(N + 1)`. The nodes inside `Ω`
/// carry unknowns; every other node is held at zero.
#[derive(Debug, Clone)]
pub struct Discretization {
    domain: Arc<Domain>,
    n: usize,
    nodes_per_axis: usize,
    half_width: f64,
    center: Point,
    h: f64,
    points: Vec<Point>,
    index: Vec<[i64; 2]>,
    lookup: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Discretization {
    pub fn new(domain: Arc<Domain>, nodes_per_axis: usize, half_width: f64) -> Result<Self> {
        let n = domain.dimension();
        if nodes_per_axis < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nodes_per_axis}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        if half_width < domain.extent() * (1.0 - 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "box half-width {half_width} does not contain the domain (extent {})",
                domain.extent()
            )));
        }
        let center = domain.center();
        let h = 2.0 * half_width / (nodes_per_axis as f64 + 1.0);
        let m = nodes_per_axis;
        let total = if n == 1 { m } else { m * m };
        let mut points = Vec::new();
        let mut index = Vec::new();
        let mut lookup = vec![NONE; total];
        for flat in 0..total {
            let (k, l) = if n == 1 { (flat, 0) } else { (flat / m, flat % m) };
            let k = k as i64 + 1;
            let l = l as i64 + 1;
            let x = [
                center[0] - half_width + k as f64 * h,
                if n == 1 {
                    0.0
                } else {
                    center[1] - half_width + l as f64 * h
                },
            ];
            if domain.profile(x) > 1e-12 {
                lookup[flat] = points.len();
                points.push(x);
                index.push([k, if n == 1 { 0 } else { l }]);
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidGrid("no grid node falls inside the domain".into()));
        }
        Ok(Self {
            domain,
            n,
            nodes_per_axis,
            half_width,
            center,
            h,
            points,
            index,
            lookup,
        })
    }

    /// Grid with prescribed spacing; `2L/h - 1` must be a whole number of nodes.
    pub fn with_spacing(domain: Arc<Domain>, h: f64, half_width: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let cells = 2.0 * half_width / h;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "2L/h = {cells} is not an integer (L = {half_width}, h = {h})"
            )));
        }
        Self::new(domain, rounded as usize - 1, half_width)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn domain_arc(&self) -> Arc<Domain> {
        self.domain.clone()
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    /// Box center (the domain's reference point).
    pub fn center(&self) -> Point {
        self.center
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Integer grid coordinates `(k, l)` of every unknown (`l = 0` in 1D).
    pub fn grid_index(&self) -> &[[i64; 2]] {
        &self.index
    }

    /// Unknown at grid coordinates `(k, l)`, if that node is inside `Ω`.
    pub fn unknown_at(&self, k: i64, l: i64) -> Option<usize> {
        let m = self.nodes_per_axis as i64;
        if k < 1 || k > m {
            return None;
        }
        let flat = if self.n == 1 {
            if l != 0 {
                return None;
            }
            k - 1
        } else {
            if l < 1 || l > m {
                return None;
            }
            (k - 1) * m + (l - 1)
        };
        match self.lookup[flat as usize] {
            NONE => None,
            i => Some(i),
        }
    }

    /// Physical coordinates of grid node `(k, l)` (may lie outside the box).
    pub fn node(&self, k: i64, l: i64) -> Point {
        [
            self.center[0] - self.half_width + k as f64 * self.h,
            if self.n == 1 {
                0.0
            } else {
                self.center[1] - self.half_width + l as f64 * self.h
            },
        ]
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Node-rule quadrature `h^n Σ g_i` of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.cell_volume() * values.iter().sum::<f64>()
    }
}
