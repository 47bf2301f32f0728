//! Dirichlet eigenvalues of `-h^2 d^2/dx^2 + V` on `[-1, 1]`: dense collocation, shooting
//! refinement, and semiclassical quantization.

pub mod cheb;
pub mod shooting;
pub mod wkb;

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::stokes::Rect;

pub use cheb::discretize;
pub use shooting::{shooting_det, ShootingDet};
pub use wkb::{wkb_formula, wkb_quantization, wkb_series, WkbSeriesResult};

pub type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Matrix,
    Shooting,
    WkbFormula,
    WkbQuantization,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Matrix => "matrix",
            Method::Shooting => "shooting",
            Method::WkbFormula => "wkb_formula",
            Method::WkbQuantization => "wkb_quantization",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenvalueRecord {
    #[serde(serialize_with = "crate::io::serialize_complex")]
    pub e: C,
    pub h: f64,
    pub method: Method,
    pub k: Option<i64>,
    pub residual: f64,
}

/// All eigenvalues of a dense matrix (complex Schur form).
pub fn dense_eigenvalues(a: &DMatrix<C>) -> Result<Vec<C>> {
    let n = a.nrows();
    let eig = a
        .clone()
        .try_schur(1e-14, 100 * n.max(10))
        .ok_or_else(|| {
            Error::EigenSolver(format!("Schur iteration did not converge within {} sweeps", 100 * n.max(10)))
        })?
        .eigenvalues()
        .ok_or_else(|| Error::EigenSolver("Schur form has non-triangular blocks".into()))?;
    Ok(eig.iter().copied().collect())
}

/// Eigenvalues at resolution `N` that persist at `3N/2`: kept when the nearest eigenvalue of
/// the finer discretization lies within `1e-6 (1 + |E|)`. `region` optionally restricts the
/// output. The residual is the displacement between the two resolutions.
pub fn eigenvalues(p: &Potential, h: f64, n: usize, region: Option<Rect>) -> Result<Vec<EigenvalueRecord>> {
    let coarse = dense_eigenvalues(&discretize(p, h, n)?)?;
    let fine = dense_eigenvalues(&discretize(p, h, 3 * n / 2)?)?;
    Ok(filter_pairs(&coarse, &fine, h, region))
}

pub fn filter_pairs(coarse: &[C], fine: &[C], h: f64, region: Option<Rect>) -> Vec<EigenvalueRecord> {
    let mut out: Vec<EigenvalueRecord> = coarse
        .iter()
        .filter(|e| region.map(|r| r.contains(**e)).unwrap_or(true))
        .filter_map(|&e| {
            let d = fine
                .iter()
                .map(|f| (f - e).norm())
                .fold(f64::INFINITY, f64::min);
            (d < 1e-6 * (1.0 + e.norm())).then_some(EigenvalueRecord {
                e,
                h,
                method: Method::Matrix,
                k: None,
                residual: d,
            })
        })
        .collect();
    out.sort_by(|a, b| a.e.re.total_cmp(&b.e.re).then(a.e.im.total_cmp(&b.e.im)));
    out
}

/// Complex secant iteration on the scaled shooting Wronskian, started at `E0`, until the
/// normalized determinant is at most `1e-10` (at most 60 iterations). Fails if the first
/// iterates do not decrease the determinant or if the iterate wanders farther than half a
/// level spacing `pi h |E0|^{1/2} / 2` from the seed.
pub fn refine(p: &Potential, h: f64, e0: C) -> Result<EigenvalueRecord> {
    let m = shooting::default_match_point(p);
    let d0 = shooting_det(p, h, e0, m)?;
    let reference = d0.log_scale;
    let reach = 0.5 * std::f64::consts::PI * h * e0.norm().sqrt().max(1.0);
    let delta = 1e-6 * (1.0 + e0.norm());
    let mut ea = e0;
    let mut fa = d0.scaled(reference);
    let mut eb = e0 + delta;
    let mut db = shooting_det(p, h, eb, m)?;
    let mut fb = db.scaled(reference);
    let d_first = d0.normalized.norm();
    for it in 0..60 {
        if db.normalized.norm() <= 1e-10 {
            return Ok(EigenvalueRecord {
                e: eb,
                h,
                method: Method::Shooting,
                k: None,
                residual: db.normalized.norm(),
            });
        }
        let denom = fb - fa;
        if denom.norm() == 0.0 {
            break;
        }
        let ec = eb - fb * (eb - ea) / denom;
        if !ec.is_finite() || (ec - e0).norm() > reach {
            return Err(Error::RefineFailed(format!(
                "secant left the basin of {e0} (iterate {ec})"
            )));
        }
        ea = eb;
        fa = fb;
        eb = ec;
        db = shooting_det(p, h, eb, m)?;
        fb = db.scaled(reference);
        if it == 2 && db.normalized.norm() >= d_first {
            return Err(Error::RefineFailed(format!(
                "determinant not decreasing from {e0}: {:.3e} -> {:.3e}",
                d_first,
                db.normalized.norm()
            )));
        }
    }
    if db.normalized.norm() <= 1e-10 {
        return Ok(EigenvalueRecord {
            e: eb,
            h,
            method: Method::Shooting,
            k: None,
            residual: db.normalized.norm(),
        });
    }
    Err(Error::RefineFailed(format!(
        "no convergence from {e0}: |det| = {:.3e} after 60 iterations",
        db.normalized.norm()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn laplacian_spectrum() {
        let a = discretize(&Potential::polynomial(vec![]), 1.0, 64).unwrap();
        let mut ev = dense_eigenvalues(&a).unwrap();
        ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        for k in 1..=10 {
            let exact = (k as f64 * PI / 2.0).powi(2);
            assert!((ev[k - 1] - exact).norm() < 1e-8 * exact.max(1.0), "k = {k}");
        }
    }

    #[test]
    fn constant_shift() {
        let shift = c(0.5, -2.0);
        let a = discretize(&Potential::polynomial(vec![shift]), 1.0, 32).unwrap();
        let mut ev = dense_eigenvalues(&a).unwrap();
        ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        assert!((ev[0] - shift - (PI / 2.0).powi(2)).norm() < 1e-10);
    }

    #[test]
    fn real_potential_real_spectrum() {
        let p = Potential::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let ev = eigenvalues(&p, 0.1, 64, None).unwrap();
        assert!(!ev.is_empty());
        assert!(ev.iter().all(|r| r.e.im.abs() <= 1e-8));
    }

    #[test]
    fn refine_laplacian() {
        let p = Potential::polynomial(vec![]);
        let exact = (PI / 2.0).powi(2);
        let r = refine(&p, 1.0, c(exact + 1e-3, 0.0)).unwrap();
        assert!((r.e - exact).norm() < 1e-10);
        assert!(refine(&p, 1.0, c(1.0, 3.0)).is_err());
    }

    #[test]
    fn multidomain_matches_single_domain_without_jump_strength() {
        let base = Potential::ix2();
        let split = Potential::new(base.coeffs().to_vec(), vec![crate::Jump { beta: 0.3, shift_im: 0.0 }]).unwrap();
        let mut a = dense_eigenvalues(&discretize(&base, 0.1, 64).unwrap()).unwrap();
        let mut b = dense_eigenvalues(&discretize(&split, 0.1, 64).unwrap()).unwrap();
        a.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
        b.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
        for k in 0..10 {
            assert!((a[k] - b[k]).norm() < 1e-9, "{} vs {}", a[k], b[k]);
        }
    }
}
