//! Lattice weights of the operator at unit spacing, without `c_{n,s}`.
//!
//! Off-diagonal entries of the assembled matrix are `-c_{n,s} h^{-2s} w(k - k')`,
//! where `w` is the integral of the kernel against the piecewise-linear (1D) or
//! bilinear (2D) hat function of the node at lattice offset `k - k'`, plus the
//! contribution of the quadratic interpolant on the cell(s) adjacent to the
//! singularity, integrated in closed form.
//!
//! Linear interpolation of the far field overestimates a convex `u` by
//! `½u''·t(1-t)h²` on every cell, which leaves a consistency error
//! `-c h^{2-2s} B Δu`. The nearest-neighbour weights carry `-B` (1D) or
//! `-B/2` per axis neighbour (2D) so that this term cancels, capped at half the
//! uncorrected weight so the matrix keeps its sign pattern. The cap is active
//! only for small `s` (below about 0.3), where `h^{2-2s}` is already beyond first order.

use rayon::prelude::*;

use crate::quadrature::gauss;

/// `w_m` for `m = 0..=max_offset` (`w_0` unused and set to zero).
pub fn weights_1d(s: f64, max_offset: usize) -> Vec<f64> {
    let rule = gauss(16);
    let kernel = |t: f64| t.powf(-1.0 - 2.0 * s);
    // α_k: falling half of the hat on [k, k+1]; β_k: rising half.
    let alpha = |k: f64| rule.integrate(k, k + 1.0, |t| (k + 1.0 - t) * kernel(t));
    let beta = |k: f64| rule.integrate(k, k + 1.0, |t| (t - k) * kernel(t));
    let mut w = vec![0.0; max_offset + 1];
    if max_offset >= 1 {
        w[1] = alpha(1.0) + 1.0 / (2.0 - 2.0 * s) - nearest_correction_1d(s);
    }
    for (m, wm) in w.iter_mut().enumerate().skip(2) {
        let m = m as f64;
        *wm = alpha(m) + beta(m - 1.0);
    }
    w
}

/// `∫_{-1}^{1} ... ` style constants of the 1D plain scheme: the coefficient of
/// `u(x_i)` from the far field and the quadratic near field.
pub fn plain_diagonal_1d(s: f64) -> f64 {
    2.0 / (2.0 * s) + 2.0 / (2.0 - 2.0 * s) - 2.0 * nearest_correction_1d(s)
}

/// Amount removed from `w_1`: `min(B, w_1/2)`.
pub fn nearest_correction_1d(s: f64) -> f64 {
    let rule = gauss(16);
    let w1 = rule.integrate(1.0, 2.0, |t| (2.0 - t) * t.powf(-1.0 - 2.0 * s)) + 1.0 / (2.0 - 2.0 * s);
    interpolation_defect_1d(s).min(0.5 * w1)
}

/// Amount removed from each axis weight `W_{10}`: `min(B/2, W_{10}/2)`.
pub fn nearest_correction_2d(s: f64) -> f64 {
    let w10 = hat_weight_2d(s, 1, 0) + near_square(s) / 4.0;
    (0.5 * interpolation_defect_2d(s)).min(0.5 * w10)
}

/// `B = Σ_{k≥1} ∫_0^1 t(1-t) (k+t)^{-1-2s} dt`.
pub fn interpolation_defect_1d(s: f64) -> f64 {
    const CELLS: usize = 20_000;
    let rule = gauss(16);
    let mut total = 0.0;
    for k in 1..=CELLS {
        let k = k as f64;
        total += rule.integrate(0.0, 1.0, |t| t * (1.0 - t) * (k + t).powf(-1.0 - 2.0 * s));
    }
    // cell averages of t(1-t) are 1/6; midpoint-rule tail
    total + (CELLS as f64 + 1.0).powf(-2.0 * s) / (6.0 * 2.0 * s)
}

/// `B = ∫_{ℝ² \ [-1,1]²} φ(y₁) |y|^{-2-2s} dy` with `φ(t) = {t}(1-{t})`.
pub fn interpolation_defect_2d(s: f64) -> f64 {
    const RADIUS: usize = 256;
    let rule = gauss(8);
    let phi = |x: f64| {
        let f = x - x.floor();
        f * (1.0 - f)
    };
    // first quadrant cells [i, i+1] × [j, j+1] outside the unit square
    let rows: Vec<f64> = (0..RADIUS)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..RADIUS {
                if i == 0 && j == 0 {
                    continue;
                }
                let sub = if i + j < 4 { 4 } else { 1 };
                let step = 1.0 / sub as f64;
                for a in 0..sub {
                    for b in 0..sub {
                        let x0 = i as f64 + a as f64 * step;
                        let y0 = j as f64 + b as f64 * step;
                        for (x, wx) in rule.on(x0, x0 + step) {
                            for (y, wy) in rule.on(y0, y0 + step) {
                                acc += wx * wy * phi(x) * (x * x + y * y).powf(-1.0 - s);
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let inside: f64 = rows.iter().sum();
    let tail = far_square(s) * (RADIUS as f64).powf(-2.0 * s) / 6.0;
    4.0 * inside + tail
}

/// `S = ∫_{[-1,1]²} |y|^{-2s} dy`.
pub fn near_square(s: f64) -> f64 {
    let rule = gauss(32);
    let q = std::f64::consts::FRAC_PI_4;
    8.0 / (2.0 - 2.0 * s) * rule.integrate(0.0, q, |t| t.cos().powf(-(2.0 - 2.0 * s)))
}

/// `∫_{ℝ² \ [-1,1]²} |y|^{-2-2s} dy`.
pub fn far_square(s: f64) -> f64 {
    let rule = gauss(32);
    let q = std::f64::consts::FRAC_PI_4;
    8.0 / (2.0 * s) * rule.integrate(0.0, q, |t| t.cos().powf(2.0 * s))
}

pub fn plain_diagonal_2d(s: f64) -> f64 {
    far_square(s) + near_square(s) - 4.0 * nearest_correction_2d(s)
}

/// Hat-function weights `W[k][l]`, `0 ≤ k, l ≤ max_offset`, stored row-major.
/// Includes the near-field correction `S/4` for the four axis neighbours.
pub fn weights_2d(s: f64, max_offset: usize) -> Vec<f64> {
    let m = max_offset + 1;
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|k| (0..m).map(|l| if l < k { 0.0 } else { hat_weight_2d(s, k, l) }).collect())
        .collect();
    let near = near_square(s) / 4.0 - nearest_correction_2d(s);
    let mut w = vec![0.0; m * m];
    for k in 0..m {
        for l in k..m {
            let mut v = rows[k][l];
            if k + l == 1 {
                v += near;
            }
            w[k * m + l] = v;
            w[l * m + k] = v;
        }
    }
    w
}

fn hat_weight_2d(s: f64, k: usize, l: usize) -> f64 {
    let rule = gauss(16);
    let (kf, lf) = (k as f64, l as f64);
    let f = |x: f64, y: f64| {
        (1.0 - (x - kf).abs()) * (1.0 - (y - lf).abs()) * (x * x + y * y).powf(-1.0 - s)
    };
    let mut total = 0.0;
    for cx in [k as i64 - 1, k as i64] {
        for cy in [l as i64 - 1, l as i64] {
            if (-1..=0).contains(&cx) && (-1..=0).contains(&cy) {
                continue;
            }
            let near = (cx as f64 + 0.5).abs().max((cy as f64 + 0.5).abs()) < 3.0;
            let sub = if near { 4 } else { 1 };
            let step = 1.0 / sub as f64;
            for i in 0..sub {
                for j in 0..sub {
                    let x0 = cx as f64 + i as f64 * step;
                    let y0 = cy as f64 + j as f64 * step;
                    for (x, wx) in rule.on(x0, x0 + step) {
                        for (y, wy) in rule.on(y0, y0 + step) {
                            total += wx * wy * f(x, y);
                        }
                    }
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;

    #[test]
    fn one_dimensional_weights_match_closed_form() {
        // s = 1/4: kernel t^{-3/2}, hat integrals have elementary antiderivatives
        let s = 0.25;
        let w = weights_1d(s, 6);
        for m in 2..=6 {
            let m = m as f64;
            let exact = adaptive(
                |t| (1.0 - (t - m).abs()).max(0.0) * t.powf(-1.5),
                &[m - 1.0, m, m + 1.0],
                1e-14,
                200,
            )
            .value;
            assert!((w[m as usize] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_weights_sum_to_tail() {
        // hats form a partition of unity on [1, ∞): Σ_{m≥1} (hat parts beyond 1) = ∫_1^∞ t^{-1-2s}
        let s = 0.5;
        let w = weights_1d(s, 20000);
        let near = 1.0 / (2.0 - 2.0 * s) - nearest_correction_1d(s);
        let total: f64 = w.iter().sum::<f64>() - near;
        let tail_beyond = 20000f64.powf(-2.0 * s) / (2.0 * s);
        assert!((total + tail_beyond - 1.0 / (2.0 * s)).abs() < 1e-6);
    }

    #[test]
    fn corrected_symbol_stays_positive() {
        // lattice symbol d - 2 Σ w_m cos(mθ) of the plain scheme, θ ∈ (0, π]
        for s in [0.05, 0.25, 0.5, 0.75, 0.95] {
            let m = 4000;
            let w = weights_1d(s, m);
            let d = plain_diagonal_1d(s);
            // the truncated tail of Σ w_m equals ∫_{m}^∞ t^{-1-2s} to leading order
            let tail = 2.0 * (m as f64).powf(-2.0 * s) / (2.0 * s);
            for k in 1..=64 {
                let theta = std::f64::consts::PI * k as f64 / 64.0;
                let sym: f64 = d - tail
                    - 2.0 * w.iter().enumerate().skip(1).map(|(j, wj)| wj * (j as f64 * theta).cos()).sum::<f64>();
                assert!(sym > 0.0, "s={s} θ={theta} {sym}");
            }
            assert!(w[1] > 0.0, "s={s}");
        }
    }

    #[test]
    fn square_constants() {
        // s = 1/2: S = ∫|y|^{-1} over the square = 8 asinh(1)
        assert!((near_square(0.5) - 8.0 * 1f64.asinh()).abs() < 1e-12);
        // far + a disk check: ∫_{|y|>1}|y|^{-3} = 2π, and the annulus difference is small
        let f = far_square(0.5);
        assert!(f < 2.0 * std::f64::consts::PI && f > 0.0);
    }

    #[test]
    fn two_dimensional_weights_partition_of_unity() {
        // Σ_{k,l} W_{kl} over the full lattice (all signs) approaches ∫ outside the square
        let s = 0.75;
        let m = 40;
        let w = weights_2d(s, m);
        let near = near_square(s) / 4.0 - nearest_correction_2d(s);
        let mut total = 0.0;
        for k in 0..=m {
            for l in 0..=m {
                let mult = if k == 0 { 1.0 } else { 2.0 } * if l == 0 { 1.0 } else { 2.0 };
                let mut v = w[k * (m + 1) + l];
                if k + l == 1 {
                    v -= near;
                }
                total += mult * v;
            }
        }
        // the hats fill ℝ² up to |y|∞ ≈ m; the missing tail is ≤ ∫_{|y|>m} |y|^{-2-2s}
        let tail = 2.0 * std::f64::consts::PI * (m as f64).powf(-2.0 * s) / (2.0 * s);
        let err = far_square(s) - total;
        assert!(err > 0.0 && err < 1.5 * tail, "{err} vs {tail}");
    }
}
