//! Polynomial complex potentials with ordered imaginary jump perturbations.
//!
//! A [`Potential`] is `V(x) = sum_k c_k x^k + i * sum_j s_j * H(x - beta_j)` where `H` is
//! the Heaviside step with `H(0) = 0`. Evaluation at a complex point uses the piece
//! selected by the real part of the argument, so each contour carries the shift of the
//! piece its real endpoints live on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;

pub type C = Complex64;

/// Imaginary jump `+ i * shift_im` applied for `x > beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub beta: f64,
    pub shift_im: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    coeffs: Vec<C>,
    jumps: Vec<Jump>,
}

/// One smooth piece `(left, right]` of a potential, with the imaginary shift in force there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub left: f64,
    pub right: f64,
    pub shift: f64,
}

impl Potential {
    pub fn new(coeffs: Vec<C>, jumps: Vec<Jump>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        for (k, j) in jumps.iter().enumerate() {
            if !j.beta.is_finite() || !j.shift_im.is_finite() {
                return Err(Error::InvalidPotential(format!("jump {k} is not finite")));
            }
            if j.beta <= -1.0 || j.beta >= 1.0 {
                return Err(Error::InvalidPotential(format!(
                    "jump {k} at {} is not strictly inside (-1, 1)",
                    j.beta
                )));
            }
            if k > 0 && j.beta <= jumps[k - 1].beta {
                return Err(Error::InvalidPotential(
                    "jump locations must be strictly increasing".into(),
                ));
            }
        }
        let mut coeffs = coeffs;
        poly::trim(&mut coeffs);
        Ok(Self { coeffs, jumps })
    }

    pub fn polynomial(coeffs: Vec<C>) -> Self {
        Self::new(coeffs, Vec::new()).expect("jump-free polynomial is always valid")
    }

    /// `V(x) = i x^2`.
    pub fn ix2() -> Self {
        Self::polynomial(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0)])
    }

    /// The two-sided perturbation `V - i delta` for `x <= beta`, `V + i delta` for `x > beta`.
    pub fn with_symmetric_jump(&self, beta: f64, delta: f64) -> Result<Self> {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] -= C::new(0.0, delta);
        let mut jumps = self.jumps.clone();
        jumps.push(Jump {
            beta,
            shift_im: 2.0 * delta,
        });
        jumps.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        Self::new(coeffs, jumps)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn has_jumps(&self) -> bool {
        !self.jumps.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].norm() == 0.0 && self.jumps.is_empty()
    }

    /// Jump-free copy of the polynomial part.
    pub fn polynomial_part(&self) -> Potential {
        Potential::polynomial(self.coeffs.clone())
    }

    /// True when every coefficient is real and there are no jumps.
    pub fn is_real(&self) -> bool {
        self.jumps.iter().all(|j| j.shift_im == 0.0) && self.coeffs.iter().all(|c| c.im == 0.0)
    }

    /// Index of the piece containing `x`; pieces are `(beta_j, beta_{j+1}]`.
    pub fn piece_index(&self, x: f64) -> usize {
        self.jumps.iter().take_while(|j| x > j.beta).count()
    }

    /// Cumulative imaginary shift on piece `idx`.
    pub fn piece_shift(&self, idx: usize) -> f64 {
        self.jumps.iter().take(idx).map(|j| j.shift_im).sum::<f64>() + 0.0
    }

    pub fn shift_at(&self, x: f64) -> f64 {
        self.piece_shift(self.piece_index(x))
    }

    /// Smooth pieces covering `[-1, 1]`, left to right.
    pub fn pieces(&self) -> Vec<Piece> {
        let mut breaks = vec![-1.0];
        breaks.extend(self.jumps.iter().map(|j| j.beta));
        breaks.push(1.0);
        breaks
            .windows(2)
            .enumerate()
            .map(|(k, w)| Piece {
                left: w[0],
                right: w[1],
                shift: self.piece_shift(k),
            })
            .collect()
    }

    /// The polynomial part evaluated at `x`, without any jump shift.
    pub fn eval_poly(&self, x: C) -> C {
        poly::eval(&self.coeffs, x)
    }

    /// `V(x)` with the shift of the piece containing `Re x`.
    pub fn eval(&self, x: C) -> C {
        self.eval_poly(x) + C::new(0.0, self.shift_at(x.re))
    }

    pub fn eval_real(&self, x: f64) -> C {
        self.eval(C::new(x, 0.0))
    }

    /// Coefficientwise derivative; jumps are discarded.
    pub fn derivative(&self) -> Potential {
        Potential::polynomial(poly::derivative(&self.coeffs))
    }

    pub fn primitive(&self) -> Primitive {
        let coeffs = poly::antiderivative(&self.coeffs);
        // On piece k the shift contributes i * (slope_k * x + intercept_k), continuous at every
        // jump and vanishing at the origin.
        let pieces = self.pieces();
        let origin_offset: f64 = self
            .jumps
            .iter()
            .map(|j| j.shift_im * (0.0 - j.beta).max(0.0))
            .sum();
        let linear = pieces
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let slope = self.piece_shift(k);
                let intercept = -self
                    .jumps
                    .iter()
                    .take(k)
                    .map(|j| j.shift_im * j.beta)
                    .sum::<f64>()
                    - origin_offset;
                (slope, intercept)
            })
            .collect();
        Primitive {
            coeffs,
            jumps: self.jumps.clone(),
            linear,
        }
    }

    /// `max |V|` over `[-1, 1]`, by sampling each piece.
    pub fn max_abs_on_interval(&self) -> f64 {
        let mut best: f64 = 0.0;
        for piece in self.pieces() {
            let n = 400;
            for k in 0..=n {
                let x = piece.left + (piece.right - piece.left) * k as f64 / n as f64;
                let v = self.eval_poly(C::new(x, 0.0)) + C::new(0.0, piece.shift);
                best = best.max(v.norm());
            }
        }
        best
    }

    /// Exact `int_a^b (V_poly + i shift)^k dx` for real bounds.
    pub fn power_integral(&self, k: u32, a: f64, b: f64, shift: f64) -> C {
        let mut shifted = self.coeffs.clone();
        shifted[0] += C::new(0.0, shift);
        poly::integrate(&poly::pow(&shifted, k), a, b)
    }
}

/// Primitive `Y` of a potential, `Y(0) = 0`, continuous across jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    coeffs: Vec<C>,
    jumps: Vec<Jump>,
    linear: Vec<(f64, f64)>,
}

impl Primitive {
    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    /// `(slope, intercept)` of the imaginary linear part on each piece.
    pub fn piece_linear(&self) -> &[(f64, f64)] {
        &self.linear
    }

    pub fn eval(&self, x: C) -> C {
        let idx = self.jumps.iter().take_while(|j| x.re > j.beta).count();
        let (slope, intercept) = self.linear[idx];
        poly::eval(&self.coeffs, x) + C::new(0.0, 1.0) * (x * slope + intercept)
    }

    pub fn eval_real(&self, x: f64) -> C {
        self.eval(C::new(x, 0.0))
    }

    /// The polynomial part only (primitive of the jump-free potential).
    pub fn eval_poly(&self, x: C) -> C {
        poly::eval(&self.coeffs, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn eval_ix2() {
        assert!((Potential::ix2().eval(c(2.0, 0.0)) - c(0.0, 4.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_with_jump_on_right() {
        let p = Potential::new(
            Potential::ix2().coeffs().to_vec(),
            vec![Jump {
                beta: 0.0,
                shift_im: 0.1,
            }],
        )
        .unwrap();
        assert!((p.eval_real(0.5) - c(0.0, 0.35)).norm() < 1e-15);
        assert!((p.eval_real(-0.5) - c(0.0, 0.25)).norm() < 1e-15);
        // at the jump the left piece wins
        assert!((p.eval_real(0.0) - c(0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_potential() {
        let p = Potential::polynomial(vec![]);
        assert!(p.is_zero());
        assert_eq!(p.eval(c(3.0, -2.0)), c(0.0, 0.0));
    }

    #[test]
    fn primitive_examples() {
        let y = Potential::ix2().primitive();
        assert!((y.coeffs()[3] - c(0.0, 1.0 / 3.0)).norm() < 1e-15);
        let y = Potential::polynomial(vec![c(2.5, -1.0)]).primitive();
        assert!((y.eval_real(2.0) - c(5.0, -2.0)).norm() < 1e-15);
        let y = Potential::polynomial(vec![c(0.0, 1.0), c(2.0, 0.0)]).primitive();
        let x = c(0.7, 0.2);
        assert!((y.eval(x) - (x * x + c(0.0, 1.0) * x)).norm() < 1e-14);
    }

    #[test]
    fn derivative_examples() {
        let d = Potential::ix2().derivative();
        assert_eq!(d.coeffs(), &[c(0.0, 0.0), c(0.0, 2.0)]);
        assert_eq!(
            Potential::polynomial(vec![c(4.0, 1.0)]).derivative().coeffs(),
            &[c(0.0, 0.0)]
        );
        let cube = Potential::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(
            cube.derivative().coeffs(),
            &[c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]
        );
    }

    #[test]
    fn primitive_continuous_across_jumps() {
        let p = Potential::ix2()
            .with_symmetric_jump(0.3, 0.1)
            .unwrap();
        let y = p.primitive();
        let eps = 1e-12;
        assert!((y.eval_real(0.3 - eps) - y.eval_real(0.3 + eps)).norm() < 1e-10);
        assert!(y.eval_real(0.0).norm() < 1e-15);
        // derivative of Y reproduces V piecewise
        for x in [-0.8, 0.1, 0.6] {
            let h = 1e-6;
            let fd = (y.eval_real(x + h) - y.eval_real(x - h)) / (2.0 * h);
            assert!((fd - p.eval_real(x)).norm() < 1e-8, "x = {x}");
        }
    }

    #[test]
    fn symmetric_jump_matches_definition() {
        let p = Potential::ix2().with_symmetric_jump(0.3, 0.1).unwrap();
        assert!((p.eval_real(0.0) - c(0.0, -0.1)).norm() < 1e-15);
        assert!((p.eval_real(0.5) - c(0.0, 0.25 + 0.1)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_jumps() {
        let base = Potential::ix2().coeffs().to_vec();
        let j = |beta| Jump { beta, shift_im: 0.1 };
        assert!(Potential::new(base.clone(), vec![j(1.0)]).is_err());
        assert!(Potential::new(base.clone(), vec![j(0.2), j(0.1)]).is_err());
        assert!(Potential::new(base, vec![j(0.1), j(0.1)]).is_err());
    }

    fn coeffs_strategy() -> impl Strategy<Value = Vec<C>> {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..6)
            .prop_map(|v| v.into_iter().map(|(a, b)| C::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn derivative_of_primitive_is_identity(coeffs in coeffs_strategy()) {
            let p = Potential::polynomial(coeffs);
            let back = poly::derivative(p.primitive().coeffs());
            for (a, b) in back.iter().zip(p.coeffs()) {
                prop_assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
            }
        }

        #[test]
        fn finite_difference_agrees_with_derivative(coeffs in coeffs_strategy(), x in -1.0..1.0f64) {
            let p = Potential::polynomial(coeffs);
            let h = 1e-6;
            let fd = (p.eval_real(x + h) - p.eval_real(x - h)) / (2.0 * h);
            let exact = p.derivative().eval_real(x);
            prop_assert!((fd - exact).norm() <= 1e-6 * (1.0 + exact.norm()));
        }
    }
}
