//! Limit-spectrum curves `Re S_{x0,x1}(E) = 0`: pointwise solves in graph form `E = a + i b(a)`,
//! continuation in `a`, asymptotes, and the three-branch set for `V = i x^2`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::contour::{self, integrand_square, Anchor, BranchedPath};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::stokes::{ix2_actions, ix2_seed_at_one, ix2_turning_points};

pub type C = Complex64;

/// A marked point of a curve: a real point of `[-1, 1]` or a moving turning point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Real(f64),
    AlphaMinus,
    AlphaPlus,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Real(x) => write!(f, "{x}"),
            Endpoint::AlphaMinus => write!(f, "alpha-"),
            Endpoint::AlphaPlus => write!(f, "alpha+"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralCurve {
    pub x0: Endpoint,
    pub x1: Endpoint,
    pub shift: f64,
    #[serde(serialize_with = "crate::io::serialize_complex_vec")]
    pub points: Vec<C>,
    pub asymptote: Option<f64>,
}

impl SpectralCurve {
    pub fn a(&self) -> Vec<f64> {
        self.points.iter().map(|z| z.re).collect()
    }

    pub fn b(&self) -> Vec<f64> {
        self.points.iter().map(|z| z.im).collect()
    }

    pub fn first(&self) -> C {
        self.points[0]
    }

    pub fn last(&self) -> C {
        *self.points.last().expect("curves are nonempty")
    }

    /// Euclidean distance from `z` to the sampled polyline.
    pub fn distance(&self, z: C) -> f64 {
        distance_to_polyline(&self.points, z)
    }

    /// Linear interpolation of `b` at `a` (graph-form curves only).
    pub fn b_at(&self, a: f64) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (lo, hi) = (w[0].re.min(w[1].re), w[0].re.max(w[1].re));
            if a >= lo && a <= hi && hi > lo {
                let t = (a - w[0].re) / (w[1].re - w[0].re);
                Some(w[0].im + t * (w[1].im - w[0].im))
            } else {
                None
            }
        })
    }
}

pub fn distance_to_polyline(points: &[C], z: C) -> f64 {
    if points.len() == 1 {
        return (points[0] - z).norm();
    }
    points
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let t = if d.norm_sqr() == 0.0 {
                0.0
            } else {
                (((z - w[0]) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
            };
            (w[0] + d * t - z).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Seed `i (E - V(x0) - i s)^{1/2}`; the inner root stays off its cut for `Re E` large.
fn graph_seed(p: &Potential, e: C, x0: f64, shift: f64) -> C {
    C::i() * (-integrand_square(p, e, shift, C::new(x0, 0.0))).sqrt()
}

/// `S_{x0,x1}(E)` along the straight segment with the graph-form seed at `x0`.
pub fn segment_action(p: &Potential, e: C, x0: f64, x1: f64, shift: f64) -> Result<C> {
    let path = BranchedPath::straight(
        C::new(x0, 0.0),
        C::new(x1, 0.0),
        graph_seed(p, e, x0, shift),
        Anchor::Start,
        shift,
    )?;
    contour::action(p, e, &path)
}

fn segment_action_derivative(p: &Potential, e: C, x0: f64, x1: f64, shift: f64) -> Result<C> {
    let path = BranchedPath::straight(
        C::new(x0, 0.0),
        C::new(x1, 0.0),
        graph_seed(p, e, x0, shift),
        Anchor::Start,
        shift,
    )?;
    contour::action_derivative(p, e, &path)
}

/// Smallest `a` accepted by [`curve_point`]: three times `max |V|` on `[-1, 1]`.
pub fn large_a_threshold(p: &Potential, shift: f64) -> f64 {
    let poly = p.polynomial_part();
    let base = poly.max_abs_on_interval();
    3.0 * (base + shift.abs())
}

const CURVE_TOL: f64 = 1e-9;

/// Solves `Re S_{x0,x1}(a + i b) = 0` for `b` in `[b_seed - 1, b_seed + 1]` by Newton with a
/// central-difference derivative, falling back to bisection whenever Newton leaves the bracket.
pub fn curve_point(p: &Potential, x0: f64, x1: f64, shift: f64, a: f64, b_seed: f64) -> Result<f64> {
    if x0 == x1 {
        return Err(Error::InvalidArgument("curve endpoints coincide".into()));
    }
    let threshold = large_a_threshold(p, shift);
    if a < threshold {
        return Err(Error::BelowAsymptoticRegime(format!(
            "a = {a} is below 3 max|V| = {threshold}"
        )));
    }
    let f = |b: f64| segment_action(p, C::new(a, b), x0, x1, shift).map(|s| s.re);
    let (mut lo, mut hi) = (b_seed - 1.0, b_seed + 1.0);
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::BracketExhausted(format!(
            "Re S has no sign change for b in [{lo}, {hi}] at a = {a}"
        )));
    }
    let mut b = b_seed;
    let mut fb = f(b)?;
    for _ in 0..200 {
        if fb.abs() <= CURVE_TOL {
            return Ok(polish(&f, b, fb));
        }
        if fb.signum() == flo.signum() {
            lo = b;
            flo = fb;
        } else {
            hi = b;
        }
        let db = 1e-6 * (1.0 + b.abs());
        let slope = (f(b + db)? - f(b - db)?) / (2.0 * db);
        let newton = b - fb / slope;
        b = if slope.is_finite() && slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        fb = f(b)?;
        if hi - lo < 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    if fb.abs() <= CURVE_TOL {
        Ok(b)
    } else {
        Err(Error::BracketExhausted(format!(
            "bracket collapsed with |Re S| = {:.3e} at a = {a}",
            fb.abs()
        )))
    }
}

/// A few extra secant steps past the tolerance, kept only while `|f|` keeps shrinking, so that
/// neighbouring curve points carry no solver noise larger than the quadrature error.
fn polish<F: Fn(f64) -> Result<f64>>(f: &F, b: f64, fb: f64) -> f64 {
    let (mut b, mut fb) = (b, fb);
    for _ in 0..3 {
        if fb == 0.0 {
            break;
        }
        let db = 1e-7 * (1.0 + b.abs());
        let Ok(fd) = f(b + db) else { break };
        let slope = (fd - fb) / db;
        let cand = b - fb / slope;
        match f(cand) {
            Ok(fc) if fc.abs() < fb.abs() && cand.is_finite() => {
                b = cand;
                fb = fc;
            }
            _ => break,
        }
    }
    b
}

/// Large-`a` limit `Im(Y(x1) - Y(x0))/(x1 - x0) + s` of `b(a)` for the piece potential `V + i s`.
pub fn asymptote(p: &Potential, x0: f64, x1: f64, shift: f64) -> Result<f64> {
    if x0 == x1 {
        return Err(Error::InvalidArgument("asymptote needs distinct endpoints".into()));
    }
    let y = p.primitive();
    let dy = y.eval_poly(C::new(x1, 0.0)) - y.eval_poly(C::new(x0, 0.0));
    Ok(dy.im / (x1 - x0) + shift)
}

/// Coefficients of `b(a) = b_inf + c1/a + c2/a^2 + O(a^-3)`, from expanding
/// `S/i = L s - I1/(2s) - I2/(8 s^3) - I3/(16 s^5) + ...` with `s = E^{1/2}`,
/// `I_k = int_{x0}^{x1} (V + i s)^k`.
pub fn expansion_coefficients(p: &Potential, x0: f64, x1: f64, shift: f64) -> (f64, f64, f64) {
    let l = x1 - x0;
    let i1 = p.power_integral(1, x0, x1, shift);
    let i2 = p.power_integral(2, x0, x1, shift);
    let i3 = p.power_integral(3, x0, x1, shift);
    let (pp, q) = (i1.re, i1.im);
    let b_inf = q / l;
    let c1 = -(pp * b_inf / 2.0 - i2.im / 4.0) / l;
    let c2 = -(-b_inf.powi(3) / 8.0
        + (3.0 * q * b_inf * b_inf + 3.0 * i2.re * b_inf - i3.im) / (8.0 * l)
        + pp * c1 / (2.0 * l));
    (b_inf, c1, c2)
}

/// Continuation of `b(a)` over `[a_min, a_max]`: predictor = previous `b`, corrector =
/// [`curve_point`], step halved on failure down to `step/64`.
pub fn trace_curve(
    p: &Potential,
    x0: f64,
    x1: f64,
    shift: f64,
    a_min: f64,
    a_max: f64,
    step: f64,
) -> Result<SpectralCurve> {
    if !(a_min < a_max) {
        return Err(Error::InvalidArgument(format!(
            "empty a-range [{a_min}, {a_max}]"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("a-step must be positive".into()));
    }
    let b_inf = asymptote(p, x0, x1, shift)?;
    let mut b = curve_point(p, x0, x1, shift, a_min, b_inf)?;
    let mut a = a_min;
    let mut points = vec![C::new(a, b)];
    let mut h = step;
    while a < a_max {
        let a_next = (a + h).min(a_max);
        match curve_point(p, x0, x1, shift, a_next, b) {
            Ok(b_next) => {
                a = a_next;
                b = b_next;
                points.push(C::new(a, b));
                h = (2.0 * h).min(step);
            }
            Err(err) => {
                h *= 0.5;
                if h < step / 64.0 {
                    return Err(err);
                }
            }
        }
    }
    Ok(SpectralCurve {
        x0: Endpoint::Real(x0),
        x1: Endpoint::Real(x1),
        shift,
        points,
        asymptote: Some(b_inf),
    })
}

fn ix2_guard(p: &Potential) -> Result<()> {
    let c = p.coeffs();
    if p.has_jumps() || c.len() != 3 || c[0].norm() != 0.0 || c[1].norm() != 0.0 || c[2] != C::i()
    {
        return Err(Error::InvalidArgument(
            "the three-branch construction is specific to V = i x^2".into(),
        ));
    }
    Ok(())
}

/// `Re S_{alpha_+(E), 1}(E)` and `S'` in the determination `w(1) = -i (E - V(1))^{1/2}`.
fn alpha_plus_action(p: &Potential, e: C) -> Result<(C, C)> {
    let (_, ap) = ix2_turning_points(e);
    let path = BranchedPath::new(vec![ap, C::new(1.0, 0.0)], ix2_seed_at_one(e), Anchor::End, 0.0)?;
    Ok((contour::action(p, e, &path)?, contour::action_derivative(p, e, &path)?))
}

/// `g(lambda) = Re S_{alpha_+, 1}(lambda e^{i pi/4})`.
pub fn junction_function(lambda: f64) -> Result<f64> {
    let p = Potential::ix2();
    let e = C::from_polar(lambda, FRAC_PI_4);
    Ok(ix2_actions(&p, e)?.0.re)
}

/// The meeting point `lambda_0 e^{i pi/4}` of the three curves for `V = i x^2`: first sign
/// change of [`junction_function`] on `(0, 20]`, refined by bisection to `1e-10`.
pub fn junction_lambda0() -> Result<f64> {
    let n = 400;
    let mut prev_l = 20.0 / n as f64;
    let mut prev = junction_function(prev_l)?;
    for k in 2..=n {
        let l = 20.0 * k as f64 / n as f64;
        let g = junction_function(l)?;
        if g == 0.0 {
            return Ok(l);
        }
        if g.signum() != prev.signum() {
            let (mut lo, mut hi, flo) = (prev_l, l, prev);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                let gm = junction_function(mid)?;
                if gm.signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_l = l;
        prev = g;
    }
    Err(Error::JunctionNotFound(
        "Re S_{alpha+,1} has no sign change on the ray lambda e^{i pi/4}, lambda in (0, 20]".into(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YShape {
    /// `Gamma_{alpha-, alpha+}`: the ray segment from 0 to the junction.
    pub ray: SpectralCurve,
    /// `Gamma_{alpha+, 1}`: from `i` to the junction.
    pub alpha_plus_one: SpectralCurve,
    /// `Gamma_{-1, 1}`: from the junction outward.
    pub minus_one_one: SpectralCurve,
    pub lambda0: f64,
    #[serde(serialize_with = "crate::io::serialize_complex")]
    pub junction: C,
}

impl YShape {
    pub fn curves(&self) -> [&SpectralCurve; 3] {
        [&self.ray, &self.alpha_plus_one, &self.minus_one_one]
    }

    pub fn distance(&self, z: C) -> f64 {
        self.curves()
            .iter()
            .map(|c| c.distance(z))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Arc-length continuation of a zero set `G(E) = 0`, `G = Re S`, with `grad G = conj(S')`.
/// `eval` returns `(S, S')`. Stops when `stop(E)` holds or after `max_steps`.
fn continue_zero_set<F, P>(
    eval: F,
    start: C,
    initial_direction: C,
    ds: f64,
    max_steps: usize,
    mut stop: P,
) -> Result<Vec<C>>
where
    F: Fn(C) -> Result<(C, C)>,
    P: FnMut(C) -> bool,
{
    let correct = |mut e: C| -> Result<C> {
        for _ in 0..30 {
            let (s, ds) = eval(e)?;
            if s.re.abs() <= CURVE_TOL {
                return Ok(e);
            }
            let grad = ds.conj();
            e -= grad * (s.re / grad.norm_sqr());
        }
        Err(Error::ContinuationFailed("corrector did not converge".into()))
    };
    let mut e = correct(start)?;
    let mut points = vec![e];
    let mut dir = initial_direction / initial_direction.norm();
    let mut h = ds;
    let mut steps = 0;
    while !stop(e) {
        steps += 1;
        if steps > max_steps {
            return Err(Error::ContinuationFailed(format!(
                "no termination after {max_steps} steps, last point {e}"
            )));
        }
        let (_, d) = eval(e)?;
        let grad = d.conj();
        let mut tangent = C::i() * grad / grad.norm();
        if (tangent * dir.conj()).re < 0.0 {
            tangent = -tangent;
        }
        match correct(e + tangent * h) {
            Ok(next) if (next - e).norm() < 2.0 * h && ((next - e) * tangent.conj()).re > 0.0 => {
                dir = (next - e) / (next - e).norm();
                e = next;
                points.push(e);
                h = (1.5 * h).min(ds);
            }
            _ => {
                h *= 0.5;
                if h < ds / 1024.0 {
                    return Err(Error::ContinuationFailed(format!(
                        "step underflow near E = {e}"
                    )));
                }
            }
        }
    }
    Ok(points)
}

/// Final approach of `Gamma_{alpha+,1}` to `E = i`: on circles `|E - i| = r` shrinking
/// geometrically to `1e-7`, solve `Re S(i + r e^{i theta}) = 0` for `theta` by secant steps.
fn approach_i(p: &Potential, from: C) -> Result<Vec<C>> {
    let g = |r: f64, th: f64| -> Result<f64> {
        let e = C::i() + C::from_polar(r, th);
        Ok(alpha_plus_action(p, e)?.0.re)
    };
    let mut r = (from - C::i()).norm();
    let mut theta = (from - C::i()).arg();
    let mut out = Vec::new();
    while r > 1e-7 {
        r = (r * 0.7).max(1e-7);
        let (mut t0, mut t1) = (theta, theta + 1e-3);
        let (mut g0, mut g1) = (g(r, t0)?, g(r, t1)?);
        let mut converged = false;
        for _ in 0..60 {
            if g1.abs() <= CURVE_TOL * r.sqrt().max(1e-3) || (t1 - t0).abs() < 1e-14 {
                converged = true;
                break;
            }
            let t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
            t0 = t1;
            g0 = g1;
            t1 = t2;
            g1 = g(r, t1)?;
        }
        if !converged || (t1 - theta).abs() > 0.5 {
            return Err(Error::ContinuationFailed(format!(
                "radial approach to E = i lost the curve at r = {r:.3e}"
            )));
        }
        theta = t1;
        out.push(C::i() + C::from_polar(r, theta));
        if r <= 1e-7 {
            break;
        }
    }
    Ok(out)
}

/// The three curves of the limit set for `V = i x^2`, meeting at `lambda_0 e^{i pi/4}`.
/// `lambda_step` sets the sampling of the ray and the arc-length step of the other two;
/// `Gamma_{-1,1}` is followed out to `Re E = a_max`.
pub fn y_shape_with(p: &Potential, lambda_step: f64, a_max: f64) -> Result<YShape> {
    ix2_guard(p)?;
    if !(lambda_step > 0.0) {
        return Err(Error::InvalidArgument("lambda step must be positive".into()));
    }
    let lambda0 = junction_lambda0()?;
    let dir = C::from_polar(1.0, FRAC_PI_4);
    let junction = dir * lambda0;

    let n = ((lambda0 / lambda_step).ceil() as usize).max(2);
    let ray_points: Vec<C> = (0..=n).map(|k| dir * (lambda0 * k as f64 / n as f64)).collect();
    let ray = SpectralCurve {
        x0: Endpoint::AlphaMinus,
        x1: Endpoint::AlphaPlus,
        shift: 0.0,
        points: ray_points,
        asymptote: None,
    };

    let eval_ap = |e: C| alpha_plus_action(p, e);
    let switch = 2.0 * lambda_step;
    let mut ap_points = continue_zero_set(
        eval_ap,
        junction,
        C::i() - junction,
        lambda_step,
        100_000,
        |e| (e - C::i()).norm() < switch,
    )?;
    let tail = approach_i(p, *ap_points.last().expect("nonempty"))?;
    ap_points.extend(tail);
    ap_points.reverse();
    let alpha_plus_one = SpectralCurve {
        x0: Endpoint::AlphaPlus,
        x1: Endpoint::Real(1.0),
        shift: 0.0,
        points: ap_points,
        asymptote: None,
    };

    let eval_mm = |e: C| -> Result<(C, C)> {
        Ok((
            segment_action(p, e, -1.0, 1.0, 0.0)?,
            segment_action_derivative(p, e, -1.0, 1.0, 0.0)?,
        ))
    };
    let mm_points = continue_zero_set(
        eval_mm,
        junction,
        C::new(1.0, 0.0),
        lambda_step,
        1_000_000,
        |e| e.re >= a_max,
    )?;
    let minus_one_one = SpectralCurve {
        x0: Endpoint::Real(-1.0),
        x1: Endpoint::Real(1.0),
        shift: 0.0,
        points: mm_points,
        asymptote: Some(asymptote(p, -1.0, 1.0, 0.0)?),
    };
    Ok(YShape {
        ray,
        alpha_plus_one,
        minus_one_one,
        lambda0,
        junction,
    })
}

pub fn y_shape(lambda_step: f64) -> Result<YShape> {
    y_shape_with(&Potential::ix2(), lambda_step, 5.0)
}
