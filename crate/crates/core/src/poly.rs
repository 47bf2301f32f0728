//! Dense complex polynomial helpers. Coefficients are stored in ascending degree.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C = Complex64;

/// Horner evaluation.
pub fn eval(coeffs: &[C], x: C) -> C {
    coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Evaluates `p(x)` and `p'(x)` together.
pub fn eval_with_derivative(coeffs: &[C], x: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

pub fn derivative(coeffs: &[C]) -> Vec<C> {
    if coeffs.len() <= 1 {
        return vec![C::new(0.0, 0.0)];
    }
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Antiderivative vanishing at the origin.
pub fn antiderivative(coeffs: &[C]) -> Vec<C> {
    let mut out = Vec::with_capacity(coeffs.len() + 1);
    out.push(C::new(0.0, 0.0));
    out.extend(
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c / (k as f64 + 1.0)),
    );
    out
}

pub fn mul(a: &[C], b: &[C]) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn pow(a: &[C], k: u32) -> Vec<C> {
    let mut out = vec![C::new(1.0, 0.0)];
    for _ in 0..k {
        out = mul(&out, a);
    }
    out
}

/// Exact integral over `[a, b]` of a polynomial with real bounds.
pub fn integrate(coeffs: &[C], a: f64, b: f64) -> C {
    let prim = antiderivative(coeffs);
    eval(&prim, C::new(b, 0.0)) - eval(&prim, C::new(a, 0.0))
}

/// Coefficients of `p(center + t)` as a polynomial in `t`.
pub fn taylor_shift(coeffs: &[C], center: C) -> Vec<C> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let next = out[j + 1];
            out[j] += center * next;
        }
    }
    out
}

/// Drops trailing zero coefficients, keeping at least the constant term.
pub fn trim(coeffs: &mut Vec<C>) {
    while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() == 0.0).unwrap_or(false) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        coeffs.push(C::new(0.0, 0.0));
    }
}

/// All roots of a polynomial via the eigenvalues of its companion matrix,
/// each polished by a few Newton steps on the original polynomial.
pub fn roots(coeffs: &[C]) -> Result<Vec<C>> {
    let mut c = coeffs.to_vec();
    trim(&mut c);
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    if deg == 1 {
        return Ok(vec![-c[0] / lead]);
    }
    let mut companion = DMatrix::<C>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = C::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -c[i] / lead;
    }
    let eig = companion
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::EigenSolver("companion matrix Schur form failed".into()))?;
    let mut found: Vec<C> = eig.iter().copied().collect();
    for r in found.iter_mut() {
        *r = newton_polish(&c, *r, 8);
    }
    Ok(found)
}

/// Newton iteration that only accepts steps which reduce |p|.
pub fn newton_polish(coeffs: &[C], mut x: C, iters: usize) -> C {
    let mut px = eval(coeffs, x).norm();
    for _ in 0..iters {
        let (p, dp) = eval_with_derivative(coeffs, x);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let cand = x - p / dp;
        let pc = eval(coeffs, cand).norm();
        if pc < px {
            x = cand;
            px = pc;
        } else {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn horner_and_derivative() {
        let p = [c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0)];
        let x = c(0.5, -1.0);
        let direct = p[0] + p[1] * x + p[2] * x * x;
        assert!((eval(&p, x) - direct).norm() < 1e-14);
        let (_, d) = eval_with_derivative(&p, x);
        assert!((d - (p[1] + p[2] * x * 2.0)).norm() < 1e-14);
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = [c(1.0, 1.0), c(-2.0, 0.0), c(0.0, 3.0), c(0.5, 0.0)];
        let center = c(0.3, -0.7);
        let shifted = taylor_shift(&p, center);
        for t in [c(0.0, 0.0), c(0.2, 0.1), c(-1.0, 0.4)] {
            assert!((eval(&shifted, t) - eval(&p, center + t)).norm() < 1e-12);
        }
    }

    #[test]
    fn roots_of_quadratic() {
        // i x^2 - i = i (x - 1)(x + 1)
        let mut r = roots(&[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-13);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn roots_of_cubic_are_polished() {
        let p = [c(2.0, -1.0), c(0.0, 1.0), c(-3.0, 0.0), c(1.0, 0.5)];
        for r in roots(&p).unwrap() {
            assert!(eval(&p, r).norm() < 1e-12);
        }
    }
}
