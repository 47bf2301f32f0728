//! Semiclassical pseudospectrum: the symbol set `{xi^2 + V(x)}` and grids of the smallest
//! singular value of the discretized resolvent.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly;
use crate::potential::Potential;
use crate::solver::discretize;
use crate::stokes::Rect;

pub type C = Complex64;

const SAMPLES_PER_PIECE: usize = 2000;

/// Real roots in `[a, b]` of a real polynomial (coefficients ascending). Identically zero
/// input yields `None`.
fn real_roots_in(coeffs: &[f64], a: f64, b: f64) -> Result<Option<Vec<f64>>> {
    let c: Vec<C> = coeffs.iter().map(|&v| C::new(v, 0.0)).collect();
    let scale = coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || coeffs.iter().skip(1).all(|v| v.abs() <= 1e-15 * scale) {
        return Ok(if coeffs[0].abs() <= 1e-15 * scale.max(1.0) { None } else { Some(vec![]) });
    }
    let tol = 1e-6;
    let mut out: Vec<f64> = poly::roots(&c)?
        .into_iter()
        .filter(|r| r.im.abs() <= tol && r.re >= a - tol && r.re <= b + tol)
        .map(|r| r.re.clamp(a, b))
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(Some(out))
}

/// Closure of `{xi^2 + V(x) : x in (-1, 1), xi real}`: some `x` in `[-1, 1]` has
/// `Im V(x) = Im z` and `Re V(x) <= Re z`.
pub fn in_symbol_set(p: &Potential, z: C) -> bool {
    for pc in p.pieces() {
        let mut im: Vec<f64> = p.coeffs().iter().map(|c| c.im).collect();
        if im.is_empty() {
            im.push(0.0);
        }
        im[0] += pc.shift - z.im;
        let re_ok = |x: f64| p.eval_poly(C::new(x, 0.0)).re <= z.re + 1e-12 * (1.0 + z.re.abs());
        match real_roots_in(&im, pc.left, pc.right) {
            Ok(Some(roots)) => {
                if roots.into_iter().any(re_ok) {
                    return true;
                }
            }
            Ok(None) => {
                // Im V constant and equal to Im z on the whole piece
                let n = SAMPLES_PER_PIECE;
                if (0..=n).any(|i| re_ok(pc.left + (pc.right - pc.left) * i as f64 / n as f64)) {
                    return true;
                }
            }
            Err(_) => {
                if sampled_distance(p, z, pc.left, pc.right, pc.shift) <= 1e-9 {
                    return true;
                }
            }
        }
    }
    false
}

fn ray_distance(v: C, z: C) -> f64 {
    if z.re >= v.re {
        (z.im - v.im).abs()
    } else {
        (z - v).norm()
    }
}

fn sampled_distance(p: &Potential, z: C, a: f64, b: f64, shift: f64) -> f64 {
    let n = SAMPLES_PER_PIECE;
    let d = |x: f64| ray_distance(p.eval_poly(C::new(x, 0.0)) + C::new(0.0, shift), z);
    let step = (b - a) / n as f64;
    let (mut best_x, mut best) = (a, f64::INFINITY);
    for i in 0..=n {
        let x = a + step * i as f64;
        let v = d(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    // golden-section polish on the bracketing cell
    let (mut lo, mut hi) = ((best_x - step).max(a), (best_x + step).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if d(x1) < d(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.min(d(0.5 * (lo + hi)))
}

/// Euclidean distance from `z` to the symbol set.
pub fn distance_to_symbol_set(p: &Potential, z: C) -> f64 {
    if in_symbol_set(p, z) {
        return 0.0;
    }
    p.pieces()
        .iter()
        .map(|pc| sampled_distance(p, z, pc.left, pc.right, pc.shift))
        .fold(f64::INFINITY, f64::min)
}

fn shifted(a: &DMatrix<C>, z: C) -> DMatrix<C> {
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= z;
    }
    m
}

fn smallest_singular_value(m: DMatrix<C>) -> Result<f64> {
    let sv = m.singular_values();
    let s = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !s.is_finite() {
        return Err(Error::EigenSolver("singular value decomposition produced non-finite values".into()));
    }
    Ok(s)
}

/// `sigma_min(A - z)` for a prepared matrix `A`.
pub fn smin_of(a: &DMatrix<C>, z: C) -> Result<f64> {
    smallest_singular_value(shifted(a, z))
}

/// Inverse iteration on `(A - z)^* (A - z)`; `None` when the residual test fails.
pub fn smin_inverse_iteration(a: &DMatrix<C>, z: C) -> Option<f64> {
    let m = shifted(a, z);
    let n = m.nrows();
    let lu = m.clone().lu();
    let adj = m.adjoint();
    let lu_adj = adj.clone().lu();
    let mut x = nalgebra::DVector::<C>::from_fn(n, |i, _| C::new(1.0 + (i as f64 * 0.7548776662).fract(), 0.0));
    x /= C::new(x.norm(), 0.0);
    let mut sigma = f64::NAN;
    for _ in 0..200 {
        let y = lu_adj.solve(&x)?;
        let w = lu.solve(&y)?;
        let nw = w.norm();
        if !(nw > 0.0) || !nw.is_finite() {
            return None;
        }
        x = w / C::new(nw, 0.0);
        let r = &m * &x;
        sigma = r.norm();
        // residual of the singular pair (sigma, x, u = r / sigma)
        let resid = if sigma > 0.0 { (&adj * (&r / C::new(sigma, 0.0)) - &x * C::new(sigma, 0.0)).norm() } else { 0.0 };
        if resid <= 1e-8 * (1.0 + m.norm()) {
            return Some(sigma);
        }
    }
    let _ = sigma;
    None
}

/// Inverse iteration when it converges, full SVD otherwise.
pub fn smin_fast(a: &DMatrix<C>, z: C) -> Result<f64> {
    match smin_inverse_iteration(a, z) {
        Some(s) => Ok(s),
        None => smin_of(a, z),
    }
}

/// Smallest singular value of `discretize(p, h, N) - z`.
pub fn smin(p: &Potential, h: f64, z: C, n: usize) -> Result<f64> {
    smin_of(&discretize(p, h, n)?, z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoGrid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Row-major by imaginary part: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
}

fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

impl PseudoGrid {
    pub fn node(&self, ix: usize, iy: usize) -> C {
        node(&self.rect, self.nx, self.ny, ix, iy)
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn spacing(&self) -> (f64, f64) {
        let dx = if self.nx > 1 { self.rect.width() / (self.nx - 1) as f64 } else { 0.0 };
        let dy = if self.ny > 1 { self.rect.height() / (self.ny - 1) as f64 } else { 0.0 };
        (dx, dy)
    }

    /// Nodes whose value is below `level`.
    pub fn sublevel(&self, level: f64) -> Vec<C> {
        let mut out = Vec::new();
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if self.value(ix, iy) < level {
                    out.push(self.node(ix, iy));
                }
            }
        }
        out
    }
}

fn node(rect: &Rect, nx: usize, ny: usize, ix: usize, iy: usize) -> C {
    C::new(axis(rect.re_min, rect.re_max, nx, ix), axis(rect.im_min, rect.im_max, ny, iy))
}

/// `sigma_min` at every node of an `nx x ny` lattice spanning `rect` (corners included; a
/// single node sits at the centre). Nodes are evaluated in parallel.
pub fn grid(p: &Potential, h: f64, rect: Rect, nx: usize, ny: usize, n: usize) -> Result<PseudoGrid> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let a = discretize(p, h, n)?;
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|k| smin_of(&a, node(&rect, nx, ny, k % nx, k / nx)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(PseudoGrid { rect, nx, ny, h, values })
}

/// Asymptotic level `Im(Y(beta') - Y(beta)) / (beta' - beta)` of the curve between two jumps,
/// taken from the curve module's large-`a` analysis.
pub fn two_jump_asymptote(p: &Potential, beta: f64, beta_prime: f64, shift: f64) -> Result<f64> {
    crate::curves::asymptote(p, beta, beta_prime, shift)
}

/// Intercept at `d = 0` of the least-squares line through `(d_i, y_i)`.
pub fn linear_extrapolation(d: &[f64], y: &[f64]) -> f64 {
    let n = d.len() as f64;
    let md = d.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = d.iter().zip(y).map(|(a, b)| (a - md) * (b - my)).sum();
    let sxx: f64 = d.iter().map(|a| (a - md) * (a - md)).sum();
    my - sxy / sxx * md
}
