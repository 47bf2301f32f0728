//! Chebyshev collocation of `-h^2 u'' + V u` with Dirichlet conditions at `x = +-1`.
//!
//! A potential with jumps is discretized piecewise: one Chebyshev grid per smooth piece, the
//! solution shared at each interface, and the interface values eliminated through the
//! derivative-continuity rows (a Schur complement).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::Potential;

pub type C = Complex64;

/// Gauss-Lobatto points `cos(j pi/n)`, `j = 0..=n`, and the first-derivative matrix on them.
pub fn cheb(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let c = |j: usize| {
        let base = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            base
        } else {
            -base
        }
    };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    // negative-sum trick for the diagonal
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

/// Dense discretization with `N` intervals in total. Without jumps this is the classical
/// `(N-1) x (N-1)` interior block; with jumps each piece gets a share of `N` proportional to its
/// length (at least 16).
pub fn discretize(p: &Potential, h: f64, n: usize) -> Result<DMatrix<C>> {
    if n < 16 {
        return Err(Error::InvalidArgument(format!("N = {n} below the minimum of 16")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("h must be positive".into()));
    }
    if p.has_jumps() {
        return discretize_pieces(p, h, n);
    }
    let (x, d) = cheb(n);
    let d2 = &d * &d;
    let m = n - 1;
    let mut a = DMatrix::<C>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = C::new(-h * h * d2[(i + 1, j + 1)], 0.0);
        }
        a[(i, i)] += p.eval_real(x[i + 1]);
    }
    Ok(a)
}

/// Grid sizes for each piece.
pub fn piece_sizes(p: &Potential, n: usize) -> Vec<usize> {
    p.pieces()
        .iter()
        .map(|pc| (((n as f64) * (pc.right - pc.left) / 2.0).round() as usize).max(16))
        .collect()
}

fn discretize_pieces(p: &Potential, h: f64, n: usize) -> Result<DMatrix<C>> {
    let pieces = p.pieces();
    let sizes = piece_sizes(p, n);
    let np = pieces.len();
    let ni: usize = sizes.iter().map(|s| s - 1).sum();
    let nf = np - 1;
    let mut a_ii = DMatrix::<C>::zeros(ni, ni);
    let mut a_if = DMatrix::<C>::zeros(ni, nf);
    let mut c_fi = DMatrix::<C>::zeros(nf, ni);
    let mut g_ff = DMatrix::<C>::zeros(nf, nf);

    let mut offset = 0;
    for (k, (pc, &nk)) in pieces.iter().zip(&sizes).enumerate() {
        let (t, d) = cheb(nk);
        let scale = 2.0 / (pc.right - pc.left);
        let d1 = &d * scale;
        let d2 = &d1 * &d1;
        let mid = 0.5 * (pc.left + pc.right);
        let half = 0.5 * (pc.right - pc.left);
        let shift = C::new(0.0, pc.shift);
        // local node j: j = 0 is the right end, j = nk the left end
        let interior = |j: usize| offset + j - 1;
        for j in 1..nk {
            let row = interior(j);
            for m in 1..nk {
                a_ii[(row, interior(m))] = C::new(-h * h * d2[(j, m)], 0.0);
            }
            let x = mid + half * t[j];
            a_ii[(row, row)] += p.eval_poly(C::new(x, 0.0)) + shift;
            if k + 1 < np {
                a_if[(row, k)] += C::new(-h * h * d2[(j, 0)], 0.0);
            }
            if k > 0 {
                a_if[(row, k - 1)] += C::new(-h * h * d2[(j, nk)], 0.0);
            }
        }
        // derivative continuity: u'(right of piece k) - u'(left of piece k+1) = 0
        if k + 1 < np {
            for m in 1..nk {
                c_fi[(k, interior(m))] += C::new(d1[(0, m)], 0.0);
            }
            g_ff[(k, k)] += C::new(d1[(0, 0)], 0.0);
            if k > 0 {
                g_ff[(k, k - 1)] += C::new(d1[(0, nk)], 0.0);
            }
        }
        if k > 0 {
            for m in 1..nk {
                c_fi[(k - 1, interior(m))] -= C::new(d1[(nk, m)], 0.0);
            }
            g_ff[(k - 1, k - 1)] -= C::new(d1[(nk, nk)], 0.0);
            if k + 1 < np {
                g_ff[(k - 1, k)] -= C::new(d1[(nk, 0)], 0.0);
            }
        }
        offset += nk - 1;
    }
    let g_inv = g_ff
        .try_inverse()
        .ok_or_else(|| Error::EigenSolver("singular interface system".into()))?;
    Ok(a_ii - a_if * (g_inv * c_fi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_matrix_is_exact_on_polynomials() {
        let (x, d) = cheb(12);
        let f: Vec<f64> = x.iter().map(|x| x.powi(5) - 2.0 * x * x).collect();
        for i in 0..=12 {
            let df: f64 = (0..=12).map(|j| d[(i, j)] * f[j]).sum();
            let exact = 5.0 * x[i].powi(4) - 4.0 * x[i];
            assert!((df - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn dimensions() {
        let a = discretize(&Potential::ix2(), 0.1, 32).unwrap();
        assert_eq!(a.nrows(), 31);
        assert!(discretize(&Potential::ix2(), 0.1, 8).is_err());
    }
}
