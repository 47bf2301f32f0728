//! Shooting for `h^2 u'' = (V - E) u` with a high-order Taylor integrator.
//!
//! Inside each smooth piece `q = (V + i s - E)/h^2` is a polynomial, so the Taylor coefficients
//! of `u` about any point follow from `(n+2)(n+1) c_{n+2} = sum_k q_k c_{n-k}`. Steps obey
//! `|q|^{1/2} tau <= 2` and the series is summed until its tail is negligible. The state is
//! renormalized whenever its size leaves `[1e-8, 1e8]`, with the logarithm of the discarded
//! scale accumulated separately.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly;
use crate::potential::Potential;

pub type C = Complex64;

/// `(u, u')` times `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub u: C,
    pub du: C,
    pub log_scale: f64,
}

impl ScaledState {
    fn renormalize(&mut self, h: f64) {
        let size = self.u.norm().max(h * self.du.norm());
        if size > 1e8 || (size < 1e-8 && size > 0.0) {
            self.u /= size;
            self.du /= size;
            self.log_scale += size.ln();
        }
    }
}

/// Taylor step of length `tau` (signed) from `x` for `u'' = q u`, `q` polynomial.
fn taylor_step(q: &[C], x: f64, tau: f64, u: C, du: C) -> Result<(C, C)> {
    let qs = poly::taylor_shift(q, C::new(x, 0.0));
    let mut c: Vec<C> = Vec::with_capacity(64);
    c.push(u);
    c.push(du);
    let mut val = u + du * tau;
    let mut der = du;
    let mut tau_n = tau; // tau^(n-1) for the derivative, tau^n for the value after update
    let mut quiet = 0;
    for n in 0..400usize {
        let mut acc = C::new(0.0, 0.0);
        for (k, qk) in qs.iter().enumerate().take(n + 1) {
            acc += qk * c[n - k];
        }
        let next = acc / (((n + 2) * (n + 1)) as f64);
        c.push(next);
        let dterm = next * ((n + 2) as f64) * tau_n;
        tau_n *= tau;
        let vterm = next * tau_n;
        val += vterm;
        der += dterm;
        let size = val.norm() + der.norm() * tau.abs();
        if vterm.norm() + dterm.norm() * tau.abs() <= 1e-17 * size {
            quiet += 1;
            if quiet >= 3 {
                return Ok((val, der));
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::StepUnderflow { x })
}

/// Integrates from `x0` to `x1` (either direction), crossing jumps of `p` with `(u, u')`
/// continuous.
pub fn integrate(p: &Potential, h: f64, e: C, x0: f64, x1: f64, start: ScaledState) -> Result<ScaledState> {
    let mut st = start;
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    // breakpoints strictly between x0 and x1, in travel order
    let mut stops: Vec<f64> = p
        .jumps()
        .iter()
        .map(|j| j.beta)
        .filter(|&b| (b - x0) * dir > 0.0 && (x1 - b) * dir > 0.0)
        .collect();
    if dir < 0.0 {
        stops.reverse();
    }
    stops.push(x1);
    let mut x = x0;
    let h2 = h * h;
    for target in stops {
        // piece between x and target: pick it by the midpoint
        let shift = p.shift_at(0.5 * (x + target));
        let mut q: Vec<C> = p.coeffs().iter().map(|c| c / h2).collect();
        q[0] += (C::new(0.0, shift) - e) / h2;
        while (target - x) * dir > 0.0 {
            let qx = poly::eval(&q, C::new(x, 0.0)).norm();
            let tau_max = if qx > 0.0 { 2.0 / qx.sqrt() } else { 0.25 };
            let tau = tau_max.min(0.25).min((target - x).abs());
            if tau < 1e-14 * (1.0 + x.abs()) && (target - x).abs() > tau {
                return Err(Error::StepUnderflow { x });
            }
            let (u, du) = taylor_step(&q, x, tau * dir, st.u, st.du)?;
            st.u = u;
            st.du = du;
            st.renormalize(h);
            x = if (target - x).abs() <= tau { target } else { x + tau * dir };
        }
    }
    Ok(st)
}

/// Wronskian matching at an interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingDet {
    /// `(u_l h u_r' - h u_l' u_r) / (|(u_l, h u_l')| |(u_r, h u_r')|)`.
    pub normalized: C,
    /// `u_l u_r' - u_l' u_r` up to the factor `exp(log_scale)`.
    pub raw: C,
    pub log_scale: f64,
}

impl ShootingDet {
    /// `W exp(log_scale - reference)`: analytic in `E` for a fixed reference.
    pub fn scaled(&self, reference: f64) -> C {
        self.raw * (self.log_scale - reference).exp()
    }
}

/// Default matching point: the first jump, or the origin.
pub fn default_match_point(p: &Potential) -> f64 {
    p.jumps().first().map(|j| j.beta).unwrap_or(0.0)
}

/// `u_l` from `-1` with `(0, 1)`, `u_r` from `+1` backward with `(0, 1)`, matched at `m`.
pub fn shooting_det(p: &Potential, h: f64, e: C, match_point: f64) -> Result<ShootingDet> {
    if !(match_point > -1.0 && match_point < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "matching point {match_point} outside (-1, 1)"
        )));
    }
    let init = ScaledState {
        u: C::new(0.0, 0.0),
        du: C::new(1.0, 0.0),
        log_scale: 0.0,
    };
    let l = integrate(p, h, e, -1.0, match_point, init)?;
    let r = integrate(p, h, e, 1.0, match_point, init)?;
    let raw = l.u * r.du - l.du * r.u;
    let nl = l.u.norm().hypot(h * l.du.norm());
    let nr = r.u.norm().hypot(h * r.du.norm());
    Ok(ShootingDet {
        normalized: raw * h / (nl * nr),
        raw,
        log_scale: l.log_scale + r.log_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_particle_sine() {
        // u'' = -E u with u(-1)=0, u'(-1)=1: u = sin(k(x+1))/k
        let p = Potential::polynomial(vec![]);
        let e = C::new(9.0, 0.0);
        let st = integrate(
            &p,
            1.0,
            e,
            -1.0,
            0.5,
            ScaledState {
                u: C::new(0.0, 0.0),
                du: C::new(1.0, 0.0),
                log_scale: 0.0,
            },
        )
        .unwrap();
        let u = st.u * st.log_scale.exp();
        assert!((u.re - (3.0f64 * 1.5).sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn det_examples() {
        let p = Potential::polynomial(vec![]);
        let d = shooting_det(&p, 1.0, C::new((PI / 2.0).powi(2), 0.0), 0.0).unwrap();
        assert!(d.normalized.norm() <= 1e-9);
        let d = shooting_det(&p, 1.0, C::new(1.0, 0.0), 0.0).unwrap();
        assert!(d.normalized.norm() >= 1e-2);
    }

    #[test]
    fn renormalization_keeps_growing_solutions_finite() {
        let p = Potential::polynomial(vec![C::new(50.0, 0.0)]);
        let d = shooting_det(&p, 0.01, C::new(0.0, 0.0), 0.0).unwrap();
        assert!(d.raw.is_finite());
        assert!(d.log_scale > 100.0);
    }
}
