use std::sync::{Arc, OnceLock};

use crate::error::{check_order, Error, Result};
use crate::geometry::Point;

use super::Discretization;

const MARGIN: i64 = 3;

/// Nodal values of `u` on the unknowns of a [`Discretization`], extended by
/// zero outside `Ω`.
///
/// Off-grid evaluation uses `u(x) = ω(x)·V(x)` with `ω = (1 - ρ²)_+^s` the
/// boundary profile of the domain and `V` a cubic-convolution interpolant of
/// the nodal ratios `u_i/ω_i`, so the `δ^s` boundary behaviour is carried by
/// `ω` rather than by the polynomial.
#[derive(Debug, Clone)]
pub struct SolutionField {
    disc: Arc<Discretization>,
    s: f64,
    values: Vec<f64>,
    ratio: OnceLock<GridInterpolant>,
}

impl SolutionField {
    pub fn new(disc: Arc<Discretization>, s: f64, values: Vec<f64>) -> Result<Self> {
        check_order(s)?;
        if values.len() != disc.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, discretization has {} unknowns",
                values.len(),
                disc.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {i}")));
        }
        Ok(Self {
            disc,
            s,
            values,
            ratio: OnceLock::new(),
        })
    }

    pub fn zeros(disc: Arc<Discretization>, s: f64) -> Result<Self> {
        let n = disc.len();
        Self::new(disc, s, vec![0.0; n])
    }

    /// Samples `g` at the unknowns.
    pub fn from_fn(disc: Arc<Discretization>, s: f64, g: impl Fn(Point) -> f64) -> Result<Self> {
        let values = disc.points().iter().map(|&x| g(x)).collect();
        Self::new(disc, s, values)
    }

    /// The boundary profile `ω = (1 - ρ²)_+^s` itself.
    pub fn profile(disc: Arc<Discretization>, s: f64) -> Result<Self> {
        let d = disc.domain_arc();
        Self::from_fn(disc, s, move |x| d.profile(x).max(0.0).powf(s))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn discretization_arc(&self) -> Arc<Discretization> {
        self.disc.clone()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn dimension(&self) -> usize {
        self.disc.dimension()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// A field on the same grid with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.disc.clone(), self.s, values)
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.with_values(self.values.iter().map(|v| t * v).collect())
            .expect("scaling keeps values finite")
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Node-rule integral `h^n Σ u_i`.
    pub fn integral(&self) -> f64 {
        self.disc.integrate(&self.values)
    }

    /// `ω(x) = (1 - ρ(x)²)_+^s`.
    pub fn omega(&self, x: Point) -> f64 {
        let p = self.disc.domain().profile(x);
        if p > 0.0 {
            p.powf(self.s)
        } else {
            0.0
        }
    }

    fn ratio(&self) -> &GridInterpolant {
        self.ratio.get_or_init(|| {
            let d = self.disc.domain();
            let v: Vec<f64> = self
                .values
                .iter()
                .zip(self.disc.points())
                .map(|(u, &x)| u / d.profile(x).powf(self.s))
                .collect();
            GridInterpolant::new(&self.disc, &v)
        })
    }

    /// Continuum value `u(x)`; zero outside `Ω`.
    pub fn value(&self, x: Point) -> f64 {
        let w = self.omega(x);
        if w == 0.0 {
            return 0.0;
        }
        w * self.ratio().eval(x)
    }

    /// Continuum gradient `∇u(x)`; zero outside `Ω`.
    pub fn gradient(&self, x: Point) -> Point {
        let d = self.disc.domain();
        let p = d.profile(x);
        if p <= 0.0 {
            return [0.0, 0.0];
        }
        let w = p.powf(self.s);
        let dp = d.profile_gradient(x);
        let k = self.s * w / p;
        let (v, dv) = self.ratio().eval_with_gradient(x);
        [w * dv[0] + v * k * dp[0], w * dv[1] + v * k * dp[1]]
    }

    /// Interpolated ratio `u/ω` at `x` (defined slightly beyond `∂Ω`).
    pub fn ratio_at(&self, x: Point) -> f64 {
        self.ratio().eval(x)
    }
}

/// Cubic-convolution interpolant of a nodal field that is smooth up to `∂Ω`
/// (e.g. the image `A u` of a solution).
#[derive(Debug, Clone)]
pub struct NodalInterpolant {
    grid: GridInterpolant,
}

impl NodalInterpolant {
    pub fn new(disc: &Discretization, values: &[f64]) -> Result<Self> {
        if values.len() != disc.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                disc.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: GridInterpolant::new(disc, values),
        })
    }

    pub fn value(&self, x: Point) -> f64 {
        self.grid.eval(x)
    }
}

/// Values on the grid padded by [`MARGIN`] nodes, with exterior nodes filled
/// layer by layer by linear extrapolation from the inside.
#[derive(Debug, Clone)]
struct GridInterpolant {
    n: usize,
    lo: i64,
    size: i64,
    origin: Point,
    h: f64,
    data: Vec<f64>,
}

impl GridInterpolant {
    fn new(disc: &Discretization, values: &[f64]) -> Self {
        let n = disc.dimension();
        let lo = 1 - MARGIN;
        let size = disc.nodes_per_axis() as i64 + 2 * MARGIN;
        let total = if n == 1 { size } else { size * size } as usize;
        let mut data = vec![0.0; total];
        let mut known = vec![false; total];
        let flat = |k: i64, l: i64| -> Option<usize> {
            let a = k - lo;
            let b = if n == 1 { 0 } else { l - lo };
            if a < 0 || a >= size || b < 0 || (n == 2 && b >= size) {
                None
            } else if n == 1 {
                Some(a as usize)
            } else {
                Some((a * size + b) as usize)
            }
        };
        for (i, &[k, l]) in disc.grid_index().iter().enumerate() {
            let f = flat(k, l).unwrap();
            data[f] = values[i];
            known[f] = true;
        }
        let dirs: Vec<(i64, i64)> = if n == 1 {
            vec![(1, 0), (-1, 0)]
        } else {
            (-1..=1)
                .flat_map(|a| (-1..=1).map(move |b| (a, b)))
                .filter(|&d| d != (0, 0))
                .collect()
        };
        let coords = |f: usize| -> (i64, i64) {
            if n == 1 {
                (f as i64 + lo, 0)
            } else {
                (f as i64 / size + lo, f as i64 % size + lo)
            }
        };
        for _layer in 0..MARGIN {
            let mut updates = Vec::new();
            for f in 0..total {
                if known[f] {
                    continue;
                }
                let (k, l) = coords(f);
                let mut acc = 0.0;
                let mut count = 0usize;
                for &(dk, dl) in &dirs {
                    let Some(f1) = flat(k - dk, l - dl) else { continue };
                    if !known[f1] {
                        continue;
                    }
                    acc += match flat(k - 2 * dk, l - 2 * dl) {
                        Some(f2) if known[f2] => 2.0 * data[f1] - data[f2],
                        _ => data[f1],
                    };
                    count += 1;
                }
                if count > 0 {
                    updates.push((f, acc / count as f64));
                }
            }
            for (f, v) in updates {
                data[f] = v;
                known[f] = true;
            }
        }
        let c = disc.center();
        let hw = disc.half_width();
        Self {
            n,
            lo,
            size,
            origin: [c[0] - hw, c[1] - hw],
            h: disc.h(),
            data,
        }
    }

    fn at(&self, k: i64, l: i64) -> f64 {
        let a = k - self.lo;
        if a < 0 || a >= self.size {
            return 0.0;
        }
        if self.n == 1 {
            return self.data[a as usize];
        }
        let b = l - self.lo;
        if b < 0 || b >= self.size {
            return 0.0;
        }
        self.data[(a * self.size + b) as usize]
    }

    fn eval(&self, x: Point) -> f64 {
        self.eval_with_gradient(x).0
    }

    fn eval_with_gradient(&self, x: Point) -> (f64, Point) {
        let (kx, wx, dx) = weights((x[0] - self.origin[0]) / self.h);
        if self.n == 1 {
            let mut v = 0.0;
            let mut g = 0.0;
            for j in 0..4 {
                let f = self.at(kx + j as i64 - 1, 0);
                v += wx[j] * f;
                g += dx[j] * f;
            }
            return (v, [g / self.h, 0.0]);
        }
        let (ky, wy, dy) = weights((x[1] - self.origin[1]) / self.h);
        let mut v = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let f = self.at(kx + i as i64 - 1, ky + j as i64 - 1);
                v += wx[i] * wy[j] * f;
                gx += dx[i] * wy[j] * f;
                gy += wx[i] * dy[j] * f;
            }
        }
        (v, [gx / self.h, gy / self.h])
    }
}

/// Base index and Keys (a = -1/2) cubic-convolution weights with derivatives.
fn weights(xi: f64) -> (i64, [f64; 4], [f64; 4]) {
    let k = xi.floor();
    let t = xi - k;
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ];
    let d = [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ];
    (k as i64, w, d)
}
