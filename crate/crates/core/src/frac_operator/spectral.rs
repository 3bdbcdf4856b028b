//! `(-Δ)^{s/2} u` on all of `ℝⁿ` by a Fourier multiplier on a padded box.

use log::warn;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::Point;

use super::SolutionField;

/// Default padding: wrap-around decays like `pad^{-n-s}` and the 1D field needs
/// a much wider box than the 2D one to push it below `1e-3`.
pub fn default_pad(n: usize) -> f64 {
    if n == 1 {
        128.0
    } else {
        16.0
    }
}

/// Samples of a whole-space function on a uniform periodic grid
/// `origin + j·h`, `j = 0..dims` per axis (row-major, first axis outer).
#[derive(Debug, Clone)]
pub struct WholeSpaceField {
    n: usize,
    dims: usize,
    origin: Point,
    h: f64,
    values: Vec<f64>,
    edge_ratio: f64,
}

impl WholeSpaceField {
    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Nodes per axis.
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max |w|` on the outer frame of the padded box over `max |w|`.
    pub fn edge_ratio(&self) -> f64 {
        self.edge_ratio
    }

    pub fn point(&self, flat: usize) -> Point {
        if self.n == 1 {
            [self.origin[0] + flat as f64 * self.h, 0.0]
        } else {
            let (j, l) = (flat / self.dims, flat % self.dims);
            [
                self.origin[0] + j as f64 * self.h,
                self.origin[1] + l as f64 * self.h,
            ]
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.values.len()).map(|f| self.point(f))
    }

    /// `h^n Σ w²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.h.powi(self.n as i32) * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// `h^n Σ w·w'` for a field on the same grid.
    pub fn inner(&self, other: &WholeSpaceField) -> Result<f64> {
        if self.values.len() != other.values.len() || self.h != other.h {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        Ok(self.h.powi(self.n as i32)
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    fn at(&self, j: i64, l: i64) -> f64 {
        let d = self.dims as i64;
        if j < 0 || j >= d {
            return 0.0;
        }
        if self.n == 1 {
            return self.values[j as usize];
        }
        if l < 0 || l >= d {
            return 0.0;
        }
        self.values[(j * d + l) as usize]
    }

    /// Linear (1D) / bilinear (2D) interpolation; zero outside the padded box.
    pub fn interpolate(&self, x: Point) -> f64 {
        let xi = (x[0] - self.origin[0]) / self.h;
        let j = xi.floor();
        let tx = xi - j;
        let j = j as i64;
        if self.n == 1 {
            return (1.0 - tx) * self.at(j, 0) + tx * self.at(j + 1, 0);
        }
        let yi = (x[1] - self.origin[1]) / self.h;
        let l = yi.floor();
        let ty = yi - l;
        let l = l as i64;
        (1.0 - tx) * ((1.0 - ty) * self.at(j, l) + ty * self.at(j, l + 1))
            + tx * ((1.0 - ty) * self.at(j + 1, l) + ty * self.at(j + 1, l + 1))
    }

    /// Linear combination `a·self + b·other` on the same grid.
    pub fn combine(&self, a: f64, other: &WholeSpaceField, b: f64) -> Result<WholeSpaceField> {
        if self.values.len() != other.values.len() || self.h != other.h {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = a * *v + b * w;
        }
        Ok(out)
    }
}

/// `w = (-Δ)^{s/2} u` with `u` extended by zero to a box `pad` times larger
/// than the discretization box; the padded grid contains the original nodes.
pub fn half_laplacian(u: &SolutionField, pad: f64) -> Result<WholeSpaceField> {
    fourier_multiplier(u, pad, u.s())
}

/// Applies the multiplier `|ξ|^exponent` to the zero-extended nodal field.
pub fn fourier_multiplier(u: &SolutionField, pad: f64, exponent: f64) -> Result<WholeSpaceField> {
    if !(pad.is_finite() && pad >= 2.0) {
        return Err(Error::InvalidArgument(format!("pad factor must be ≥ 2, got {pad}")));
    }
    let disc = u.discretization();
    let n = disc.dimension();
    let cells = disc.nodes_per_axis() + 1;
    let dims = (pad * cells as f64).round() as usize;
    let off = (dims - cells) / 2;
    let h = disc.h();
    let c = disc.center();
    let l = disc.half_width();
    let origin = [
        c[0] - l - off as f64 * h,
        if n == 1 { 0.0 } else { c[1] - l - off as f64 * h },
    ];
    let total = if n == 1 { dims } else { dims * dims };
    let mut buf = vec![Complex::new(0.0, 0.0); total];
    for (&[k, ll], &v) in disc.grid_index().iter().zip(u.values()) {
        let j = k as usize + off;
        let f = if n == 1 { j } else { j * dims + ll as usize + off };
        buf[f] = Complex::new(v, 0.0);
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(dims);
    let inv = planner.plan_fft_inverse(dims);
    let freq: Vec<f64> = (0..dims)
        .map(|m| {
            let m = if m <= (dims - 1) / 2 {
                m as f64
            } else {
                m as f64 - dims as f64
            };
            2.0 * std::f64::consts::PI * m / (dims as f64 * h)
        })
        .collect();
    if n == 1 {
        fwd.process(&mut buf);
        for (z, xi) in buf.iter_mut().zip(&freq) {
            *z *= xi.abs().powf(exponent);
        }
        inv.process(&mut buf);
    } else {
        transform_2d(&mut buf, dims, &*fwd);
        for j in 0..dims {
            for ll in 0..dims {
                let r = (freq[j] * freq[j] + freq[ll] * freq[ll]).sqrt();
                buf[j * dims + ll] *= r.powf(exponent);
            }
        }
        transform_2d(&mut buf, dims, &*inv);
    }
    let norm = 1.0 / total as f64;
    let values: Vec<f64> = buf.iter().map(|z| z.re * norm).collect();
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut edge: f64 = 0.0;
    for (f, v) in values.iter().enumerate() {
        let on_frame = if n == 1 {
            f == 0 || f == dims - 1
        } else {
            let (j, ll) = (f / dims, f % dims);
            j == 0 || ll == 0 || j == dims - 1 || ll == dims - 1
        };
        if on_frame {
            edge = edge.max(v.abs());
        }
    }
    let edge_ratio = if max > 0.0 { edge / max } else { 0.0 };
    if edge_ratio > 1e-3 {
        warn!(
            "half-Laplacian: |w| at the padded-box edge is {edge_ratio:.2e} of its maximum \
             (pad = {pad}); periodic truncation may contaminate the result"
        );
    }
    Ok(WholeSpaceField {
        n,
        dims,
        origin,
        h,
        values,
        edge_ratio,
    })
}

fn transform_2d(buf: &mut [Complex<f64>], dims: usize, fft: &dyn rustfft::Fft<f64>) {
    for row in buf.chunks_mut(dims) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); dims];
    for l in 0..dims {
        for j in 0..dims {
            col[j] = buf[j * dims + l];
        }
        fft.process(&mut col);
        for j in 0..dims {
            buf[j * dims + l] = col[j];
        }
    }
}
