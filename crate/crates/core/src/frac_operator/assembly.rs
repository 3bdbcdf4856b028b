use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};
use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_order, Error, Result};
use crate::geometry::DomainSpec;

use super::oracle::PointwiseOracle;
use super::{normalization_constant, stencil, torsion_constant, Discretization};

/// How the diagonal of the matrix is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `d_i` chosen so that the matrix maps the boundary profile
    /// `ω = (1 - ρ²)_+^s` exactly onto `(-Δ)^s ω` at the nodes.
    #[default]
    Calibrated,
    /// Collocation diagonal: far-field tail plus quadratic near field.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub scheme: Scheme,
    /// Maximum number of unknowns (dense storage guard).
    pub node_cap: usize,
    /// Absolute tolerance of the pointwise oracle when it supplies `(-Δ)^s ω`.
    pub oracle_tol: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Calibrated,
            node_cap: 4096,
            oracle_tol: 1e-7,
        }
    }
}

/// Where the calibration image `(-Δ)^s ω` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageSource {
    ClosedForm,
    Oracle,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyMeta {
    pub scheme: Scheme,
    pub quadrature: String,
    /// Beyond this distance the kernel acts only on `u(x_i)` and is integrated analytically.
    pub truncation_radius: f64,
    pub image_source: ImageSource,
}

/// Dense matrix of `(-Δ)^s` on the unknowns of a [`Discretization`].
pub struct FracOperator {
    disc: Arc<Discretization>,
    s: f64,
    c: f64,
    matrix: Vec<f64>,
    omega: Vec<f64>,
    image: Vec<f64>,
    meta: AssemblyMeta,
    llt: OnceLock<std::result::Result<Llt<f64>, String>>,
}

impl std::fmt::Debug for FracOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FracOperator")
            .field("n", &self.dimension())
            .field("s", &self.s)
            .field("c", &self.c)
            .field("unknowns", &self.len())
            .field("meta", &self.meta)
            .finish()
    }
}

/// Assembles the operator with default options.
pub fn assemble(disc: Arc<Discretization>, s: f64) -> Result<FracOperator> {
    FracOperator::assemble(disc, s, &AssemblyOptions::default())
}

impl FracOperator {
    pub fn assemble(disc: Arc<Discretization>, s: f64, opts: &AssemblyOptions) -> Result<Self> {
        check_order(s)?;
        let n = disc.dimension();
        let c = normalization_constant(n, s)?;
        let size = disc.len();
        if size > opts.node_cap {
            return Err(Error::GridTooLarge {
                nodes: size,
                cap: opts.node_cap,
                bytes: 8 * (size as u64) * (size as u64),
            });
        }
        let h = disc.h();
        let scale = c * h.powf(-2.0 * s);
        let max_offset = disc.nodes_per_axis();
        let index = disc.grid_index();
        let started = std::time::Instant::now();

        let (weights, plain_diag) = if n == 1 {
            (stencil::weights_1d(s, max_offset), stencil::plain_diagonal_1d(s))
        } else {
            (stencil::weights_2d(s, max_offset), stencil::plain_diagonal_2d(s))
        };
        let stride = max_offset + 1;
        let weight = |i: usize, j: usize| -> f64 {
            let dk = (index[i][0] - index[j][0]).unsigned_abs() as usize;
            let dl = (index[i][1] - index[j][1]).unsigned_abs() as usize;
            if n == 1 {
                weights[dk]
            } else {
                weights[dk * stride + dl]
            }
        };

        let domain = disc.domain();
        let omega: Vec<f64> = disc
            .points()
            .iter()
            .map(|&x| domain.profile(x).powf(s))
            .collect();
        let (image, source) = match opts.scheme {
            Scheme::Plain => (vec![0.0; size], ImageSource::None),
            Scheme::Calibrated => profile_image(&disc, s, opts.oracle_tol)?,
        };

        let mut matrix = vec![0.0; size * size];
        matrix
            .par_chunks_mut(size)
            .enumerate()
            .for_each(|(i, row)| {
                let mut off = 0.0;
                for (j, a) in row.iter_mut().enumerate() {
                    if j != i {
                        *a = -scale * weight(i, j);
                        off += *a * omega[j];
                    }
                }
                row[i] = match opts.scheme {
                    Scheme::Plain => scale * plain_diag,
                    Scheme::Calibrated => (image[i] - off) / omega[i],
                };
            });
        debug!(
            "assembled {size}x{size} operator (n={n}, s={s}, h={h:.3e}) in {:.2?}",
            started.elapsed()
        );
        let meta = AssemblyMeta {
            scheme: opts.scheme,
            quadrature: if n == 1 {
                "hat functions, Gauss-Legendre 16 per cell; exact quadratic near field".into()
            } else {
                "bilinear hats, tensor Gauss-Legendre 16x16 per cell (4x4 subcells near the origin); exact quadratic near field".into()
            },
            truncation_radius: 2.0 * disc.half_width(),
            image_source: source,
        };
        Ok(Self {
            disc,
            s,
            c,
            matrix,
            omega,
            image,
            meta,
            llt: OnceLock::new(),
        })
    }

    /// Rebuilds an operator from stored parts (used by the cache).
    pub(crate) fn from_parts(
        disc: Arc<Discretization>,
        s: f64,
        matrix: Vec<f64>,
        omega: Vec<f64>,
        image: Vec<f64>,
        meta: AssemblyMeta,
    ) -> Result<Self> {
        let c = normalization_constant(disc.dimension(), s)?;
        Ok(Self {
            disc,
            s,
            c,
            matrix,
            omega,
            image,
            meta,
            llt: OnceLock::new(),
        })
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

    /// `c_{n,s}`.
    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn meta(&self) -> &AssemblyMeta {
        &self.meta
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    /// Nodal boundary profile `ω_i`.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Nodal `(-Δ)^s ω` used for calibration (zeros for the plain scheme).
    pub fn profile_image(&self) -> &[f64] {
        &self.image
    }

    /// `A u`, each row summed in index order.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.len(), "vector length does not match operator");
        self.matrix
            .par_chunks(self.len())
            .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨u, A v⟩` (plain Euclidean pairing, no `h^n`).
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        self.apply(v).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    /// `max |a_ij - a_ji| / max |a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        let mut big: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                big = big.max(self.matrix[i * n + j].abs());
                if j > i {
                    worst = worst.max((self.matrix[i * n + j] - self.matrix[j * n + i]).abs());
                }
            }
        }
        if big == 0.0 {
            0.0
        } else {
            worst / big
        }
    }

    pub fn to_mat(&self) -> Mat<f64> {
        let n = self.len();
        Mat::from_fn(n, n, |i, j| self.matrix[i * n + j])
    }

    fn cholesky(&self) -> Result<&Llt<f64>> {
        self.llt
            .get_or_init(|| {
                self.to_mat()
                    .llt(Side::Lower)
                    .map_err(|e| format!("Cholesky factorization failed: {e:?}"))
            })
            .as_ref()
            .map_err(|e| Error::SingularMatrix(e.clone()))
    }

    /// Solves `A u = rhs` by the (cached) Cholesky factorization.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has {} entries, operator has {}",
                rhs.len(),
                self.len()
            )));
        }
        let llt = self.cholesky()?;
        let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        llt.solve_in_place(x.as_mut());
        Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
    }

    /// Whether the Cholesky factorization succeeds (numerical positive definiteness).
    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    /// Smallest eigenvalue by a dense symmetric eigensolver; `O(N³)`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = self
            .to_mat()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::SingularMatrix(format!("eigenvalue solver failed: {e:?}")))?;
        Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
    }
}

/// `(-Δ)^s ω` at the nodes: closed form on intervals and disks, the pointwise
/// oracle on general star domains.
fn profile_image(disc: &Discretization, s: f64, tol: f64) -> Result<(Vec<f64>, ImageSource)> {
    let n = disc.dimension();
    let domain = disc.domain();
    let radius = match domain.spec() {
        DomainSpec::Interval { a, b } => Some(0.5 * (b - a)),
        DomainSpec::Disk { radius, .. } => Some(*radius),
        DomainSpec::PolarStar { cos, sin, r0, .. } => {
            if cos.iter().chain(sin).all(|c| *c == 0.0) {
                Some(*r0)
            } else {
                None
            }
        }
    };
    if let Some(r) = radius {
        let g = torsion_constant(n, s) * r.powf(-2.0 * s);
        return Ok((vec![g; disc.len()], ImageSource::ClosedForm));
    }
    let oracle = PointwiseOracle::new(n, s)?.with_tolerance(tol);
    let image: Result<Vec<f64>> = disc
        .points()
        .par_iter()
        .map(|&x| oracle.apply(domain, |y| domain.profile(y).max(0.0).powf(s), x))
        .collect();
    Ok((image?, ImageSource::Oracle))
}
