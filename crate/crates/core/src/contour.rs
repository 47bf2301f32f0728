//! Turning points, square-root branch continuation along polylines, and action integrals
//! `S_{x,y}(E) = int_x^y (V(t) + i s - E)^{1/2} dt`.
//!
//! Off the real axis only the polynomial part of the potential is evaluated; each path
//! carries the imaginary shift `s` of the piece it belongs to.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly;
use crate::potential::Potential;
use crate::quad;

pub type C = Complex64;

const COLLISION_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoint {
    pub location: C,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurningPointSet {
    pub points: Vec<TurningPoint>,
}

impl TurningPointSet {
    pub fn locations(&self) -> Vec<C> {
        self.points.iter().map(|t| t.location).collect()
    }

    pub fn is_simple(&self) -> bool {
        self.points.iter().all(|t| t.order == 1)
    }

    pub fn total_order(&self) -> usize {
        self.points.iter().map(|t| t.order).sum()
    }

    /// Turning point closest to `x`.
    pub fn nearest(&self, x: C) -> Option<TurningPoint> {
        self.points
            .iter()
            .copied()
            .min_by(|a, b| (a.location - x).norm().total_cmp(&(b.location - x).norm()))
    }
}

/// Coefficients of `V(x) + i s - E`.
pub fn shifted_coeffs(p: &Potential, e: C, shift: f64) -> Vec<C> {
    let mut c = p.coeffs().to_vec();
    c[0] += C::new(0.0, shift) - e;
    c
}

/// `V(x) + i s - E` at a complex point, using the polynomial part only.
pub fn integrand_square(p: &Potential, e: C, shift: f64, x: C) -> C {
    p.eval_poly(x) + C::new(0.0, shift) - e
}

/// Zeros of `V + i s - E` with multiplicities.
pub fn turning_points(p: &Potential, e: C, shift: f64) -> Result<TurningPointSet> {
    if p.degree() == 0 {
        return Err(Error::NoTurningPoints);
    }
    let coeffs = shifted_coeffs(p, e, shift);
    let roots = poly::roots(&coeffs)?;
    let radius = 1e-7 * (1.0 + e.norm()).sqrt();
    let mut clusters: Vec<(C, usize)> = Vec::new();
    for r in roots {
        match clusters
            .iter_mut()
            .find(|(c, n)| (*c / *n as f64 - r).norm() <= radius)
        {
            Some(cl) => {
                cl.0 += r;
                cl.1 += 1;
            }
            None => clusters.push((r, 1)),
        }
    }
    let mut points: Vec<TurningPoint> = clusters
        .into_iter()
        .map(|(sum, n)| TurningPoint {
            location: sum / n as f64,
            order: n,
        })
        .collect();
    points.sort_by(|a, b| {
        a.location
            .re
            .total_cmp(&b.location.re)
            .then(a.location.im.total_cmp(&b.location.im))
    });
    Ok(TurningPointSet { points })
}

/// Where the branch seed of a path is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// The first vertex.
    Start,
    /// The last vertex.
    End,
    /// The midpoint of the first segment; used when the path starts at a turning point.
    FirstMidpoint,
}

/// A polyline carrying a continuous branch of `(V + i s - E)^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchedPath {
    pub vertices: Vec<C>,
    pub seed: C,
    pub anchor: Anchor,
    pub shift: f64,
}

impl BranchedPath {
    pub fn new(vertices: Vec<C>, seed: C, anchor: Anchor, shift: f64) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("a path needs at least two vertices".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath("consecutive vertices coincide".into()));
        }
        if vertices.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) || !seed.is_finite() {
            return Err(Error::InvalidPath("non-finite vertex or seed".into()));
        }
        Ok(Self {
            vertices,
            seed,
            anchor,
            shift,
        })
    }

    /// Path seeded with the principal root at its anchor point.
    pub fn principal(
        p: &Potential,
        e: C,
        vertices: Vec<C>,
        anchor: Anchor,
        shift: f64,
    ) -> Result<Self> {
        let mut path = Self::new(vertices, C::new(0.0, 0.0), anchor, shift)?;
        path.seed = integrand_square(p, e, shift, path.anchor_point()).sqrt();
        Ok(path)
    }

    pub fn straight(a: C, b: C, seed: C, anchor: Anchor, shift: f64) -> Result<Self> {
        Self::new(vec![a, b], seed, anchor, shift)
    }

    pub fn start(&self) -> C {
        self.vertices[0]
    }

    pub fn end(&self) -> C {
        *self.vertices.last().expect("nonempty")
    }

    pub fn anchor_point(&self) -> C {
        match self.anchor {
            Anchor::Start => self.vertices[0],
            Anchor::End => self.end(),
            Anchor::FirstMidpoint => 0.5 * (self.vertices[0] + self.vertices[1]),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            seed: -self.seed,
            ..self.clone()
        }
    }

    /// Checks `seed^2 = V + i s - E` at the anchor to relative precision `1e-12`.
    pub fn check_seed(&self, p: &Potential, e: C) -> Result<()> {
        let f = integrand_square(p, e, self.shift, self.anchor_point());
        let err = (self.seed * self.seed - f).norm();
        if err > 1e-12 * f.norm().max(1e-300) && err > 1e-300 {
            return Err(Error::InvalidPath(format!(
                "branch seed does not square to the integrand (mismatch {err:.3e})"
            )));
        }
        Ok(())
    }
}

/// Picks whichever of `+-sqrt(f)` is closer to `reference`.
pub fn nearest_root(f: C, reference: C) -> C {
    let r = f.sqrt();
    if (r - reference).norm() <= (r + reference).norm() {
        r
    } else {
        -r
    }
}

fn segment_distance(x: C, a: C, b: C) -> f64 {
    let d = b - a;
    let t = ((x - a) * d.conj()).re / d.norm_sqr();
    let t = t.clamp(0.0, 1.0);
    (a + d * t - x).norm()
}

#[derive(Debug, Clone)]
struct SegmentBranch {
    a: C,
    b: C,
    reference: C,
    w_ref: C,
    tp_at_a: bool,
    tp_at_b: bool,
}

/// Exact continuation of the branch along each segment of a path.
///
/// On a straight segment the ratios `(x - r)/(M - r)` trace segments starting at 1 which never
/// meet the negative axis, so `w(x) = w(M) prod sqrt((x - r)/(M - r))^m` is continuous.
#[derive(Debug, Clone)]
pub struct Branch {
    coeffs: Vec<C>,
    roots: Vec<(C, usize)>,
    segments: Vec<SegmentBranch>,
}

impl Branch {
    pub fn new(p: &Potential, e: C, path: &BranchedPath) -> Result<Self> {
        let coeffs = shifted_coeffs(p, e, path.shift);
        let roots: Vec<(C, usize)> = if p.degree() == 0 {
            Vec::new()
        } else {
            turning_points(p, e, path.shift)?
                .points
                .into_iter()
                .map(|t| (t.location, t.order))
                .collect()
        };
        let v = &path.vertices;
        let nseg = v.len() - 1;
        let scale = |x: C| COLLISION_RADIUS * (1.0 + x.norm());
        let near_tp = |x: C| roots.iter().any(|(r, _)| (x - *r).norm() <= scale(x));

        for (k, w) in v.windows(2).enumerate() {
            for (r, _) in &roots {
                let d = segment_distance(*r, w[0], w[1]);
                if d >= COLLISION_RADIUS {
                    continue;
                }
                let at_start = k == 0 && (w[0] - r).norm() <= scale(w[0]);
                let at_end = k == nseg - 1 && (w[1] - r).norm() <= scale(w[1]);
                if !(at_start || at_end) {
                    return Err(Error::BranchPointCollision {
                        point: *r,
                        distance: d,
                    });
                }
            }
        }
        let anchor_pt = path.anchor_point();
        if coeffs_eval(&coeffs, anchor_pt).norm() == 0.0 || path.seed.norm() == 0.0 {
            return Err(Error::InvalidPath(
                "branch seed anchored at a turning point; anchor at the first midpoint".into(),
            ));
        }
        let anchor_seg = match path.anchor {
            Anchor::Start | Anchor::FirstMidpoint => 0,
            Anchor::End => nseg - 1,
        };
        let mut segments: Vec<Option<SegmentBranch>> = vec![None; nseg];
        let mk = |k: usize, reference: C, w_ref: C| SegmentBranch {
            a: v[k],
            b: v[k + 1],
            reference,
            w_ref,
            tp_at_a: k == 0 && near_tp(v[0]),
            tp_at_b: k == nseg - 1 && near_tp(v[nseg]),
        };
        let w_anchor = nearest_root(coeffs_eval(&coeffs, anchor_pt), path.seed);
        segments[anchor_seg] = Some(mk(anchor_seg, anchor_pt, w_anchor));
        for k in anchor_seg + 1..nseg {
            let prev = segments[k - 1].as_ref().expect("filled");
            let w = Self::eval_segment(&coeffs, &roots, prev, 1.0);
            segments[k] = Some(mk(k, v[k], w));
        }
        for k in (0..anchor_seg).rev() {
            let next = segments[k + 1].as_ref().expect("filled");
            let w = Self::eval_segment(&coeffs, &roots, next, 0.0);
            segments[k] = Some(mk(k, v[k + 1], w));
        }
        Ok(Self {
            coeffs,
            roots,
            segments: segments.into_iter().map(|s| s.expect("filled")).collect(),
        })
    }

    fn eval_segment(coeffs: &[C], roots: &[(C, usize)], seg: &SegmentBranch, t: f64) -> C {
        let x = seg.a + (seg.b - seg.a) * t;
        let mut w = seg.w_ref;
        for (r, m) in roots {
            let ratio = (x - r) / (seg.reference - r);
            let s = ratio.sqrt();
            for _ in 0..*m {
                w *= s;
            }
        }
        let f = coeffs_eval(coeffs, x);
        if f.norm() == 0.0 {
            return C::new(0.0, 0.0);
        }
        nearest_root(f, w)
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    /// Branch value at parameter `t` in `[0, 1]` on segment `k`.
    pub fn eval(&self, k: usize, t: f64) -> C {
        Self::eval_segment(&self.coeffs, &self.roots, &self.segments[k], t)
    }

    pub fn at_start(&self) -> C {
        self.eval(0, 0.0)
    }

    pub fn at_end(&self) -> C {
        self.eval(self.segments.len() - 1, 1.0)
    }

    /// `int w(x) dx`-type integral `int kernel(x, w(x)) dx` along the path.
    pub fn integrate<K: Fn(C, C) -> C>(&self, kernel: K, tol: f64) -> Result<C> {
        let nseg = self.segments.len();
        let mut total = C::new(0.0, 0.0);
        let seg_tol = tol / nseg as f64;
        for k in 0..nseg {
            let seg = &self.segments[k];
            let d = seg.b - seg.a;
            let f = |t: f64| {
                let x = seg.a + d * t;
                kernel(x, self.eval(k, t)) * d
            };
            total += match (seg.tp_at_a, seg.tp_at_b) {
                (false, false) => integrate_scaled(f, 0.0, 1.0, seg_tol)?,
                (true, false) => integrate_scaled(|u| f(u * u) * (2.0 * u), 0.0, 1.0, seg_tol)?,
                (false, true) => {
                    integrate_scaled(|u| f(1.0 - u * u) * (2.0 * u), 0.0, 1.0, seg_tol)?
                }
                (true, true) => {
                    let half = 0.5 * seg_tol;
                    let left = integrate_scaled(
                        |u| f(0.5 * u * u) * u,
                        0.0,
                        1.0,
                        half,
                    )?;
                    let right = integrate_scaled(
                        |u| f(1.0 - 0.5 * u * u) * u,
                        0.0,
                        1.0,
                        half,
                    )?;
                    left + right
                }
            };
        }
        Ok(total)
    }
}

fn coeffs_eval(coeffs: &[C], x: C) -> C {
    poly::eval(coeffs, x)
}

/// Adaptive quadrature whose absolute tolerance is floored at a few ulps of the integral's
/// magnitude, so that large `|E|` does not demand accuracy below roundoff.
fn integrate_scaled<F: FnMut(f64) -> C>(mut f: F, a: f64, b: f64, tol: f64) -> Result<C> {
    let (rough, _) = quad::gk15(&mut f, a, b);
    let tol = tol.max(64.0 * f64::EPSILON * rough.norm());
    quad::integrate(f, a, b, tol, quad::MAX_SUBDIVISIONS)
}

/// `S(E)` along the path.
pub fn action(p: &Potential, e: C, path: &BranchedPath) -> Result<C> {
    let branch = Branch::new(p, e, path)?;
    branch.integrate(|_, w| w, quad::DEFAULT_TOL)
}

/// `dS/dE = -1/2 int (V + i s - E)^{-1/2}` along the path. Valid also when the path ends at a
/// simple turning point that moves with `E`, since the integrand vanishes there.
pub fn action_derivative(p: &Potential, e: C, path: &BranchedPath) -> Result<C> {
    let branch = Branch::new(p, e, path)?;
    branch.integrate(|_, w| -0.5 / w, 1e-9)
}

/// Sampled nearest-sheet continuation from the path start: returns `(x, w)` pairs whose
/// consecutive values satisfy `|w_{k+1} - w_k| < |w_k|`.
pub fn continue_branch(p: &Potential, e: C, path: &BranchedPath) -> Result<Vec<(C, C)>> {
    let roots = if p.degree() == 0 {
        Vec::new()
    } else {
        turning_points(p, e, path.shift)?.locations()
    };
    for w in path.vertices.windows(2) {
        for r in &roots {
            let d = segment_distance(*r, w[0], w[1]);
            if d < COLLISION_RADIUS {
                return Err(Error::BranchPointCollision { point: *r, distance: d });
            }
        }
    }
    let f = |x: C| integrand_square(p, e, path.shift, x);
    let start = path.start();
    let mut w = nearest_root(f(start), path.seed);
    if path.anchor != Anchor::Start {
        return Err(Error::InvalidPath(
            "sampled continuation requires a seed anchored at the path start".into(),
        ));
    }
    let mut out = vec![(start, w)];
    for seg in path.vertices.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mut t = 0.0f64;
        let mut dt = 1.0 / 16.0;
        while t < 1.0 {
            let t1 = (t + dt).min(1.0);
            let x1 = a + (b - a) * t1;
            let w1 = nearest_root(f(x1), w);
            if (w1 - w).norm() < w.norm() || w.norm() == 0.0 && w1.norm() == 0.0 {
                out.push((x1, w1));
                w = w1;
                t = t1;
                dt = (dt * 2.0).min(1.0 / 16.0);
            } else {
                dt *= 0.5;
                if dt < 1e-14 {
                    return Err(Error::InvalidPath(
                        "sampled continuation could not resolve the branch".into(),
                    ));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn turning_points_ix2() {
        let p = Potential::ix2();
        let tp = turning_points(&p, c(0.0, 1.0), 0.0).unwrap();
        assert_eq!(tp.points.len(), 2);
        assert!((tp.points[0].location - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((tp.points[1].location - c(1.0, 0.0)).norm() < 1e-12);
        let tp = turning_points(&p, c(0.0, 0.0), 0.0).unwrap();
        assert_eq!(tp.points.len(), 1);
        assert_eq!(tp.points[0].order, 2);
        let e = c(3.0, -1.5);
        let alpha = (c(0.0, -1.0) * e).sqrt();
        let tp = turning_points(&p, e, 0.0).unwrap();
        assert!(tp.points.iter().any(|t| (t.location - alpha).norm() < 1e-12));
        assert!(tp.points.iter().any(|t| (t.location + alpha).norm() < 1e-12));
        for t in &tp.points {
            assert!(integrand_square(&p, e, 0.0, t.location).norm() <= 1e-10 * (1.0 + e.norm()));
        }
    }

    #[test]
    fn constant_potential_has_no_turning_points() {
        let p = Potential::polynomial(vec![c(1.0, 0.0)]);
        assert!(matches!(turning_points(&p, c(0.0, 0.0), 0.0), Err(Error::NoTurningPoints)));
    }

    #[test]
    fn constant_integrand_action() {
        let p = Potential::polynomial(vec![]);
        let path = BranchedPath::straight(c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), Anchor::Start, 0.0)
            .unwrap();
        let s = action(&p, c(-1.0, 0.0), &path).unwrap();
        assert!((s - c(2.0, 0.0)).norm() < 1e-13);
        let samples = continue_branch(&p, c(-1.0, 0.0), &path).unwrap();
        assert!(samples.iter().all(|(_, w)| (*w - c(1.0, 0.0)).norm() < 1e-15));
    }

    fn circle(center: C, r: f64, n: usize) -> Vec<C> {
        (0..=n)
            .map(|k| center + C::from_polar(r, 2.0 * PI * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn monodromy_around_one_turning_point() {
        let p = Potential::ix2();
        let e = c(0.0, 1.0);
        let path = BranchedPath::principal(&p, e, circle(c(1.0, 0.0), 0.5, 64), Anchor::Start, 0.0)
            .unwrap();
        let branch = Branch::new(&p, e, &path).unwrap();
        assert!((branch.at_end() + path.seed).norm() < 1e-12);
        let sampled = continue_branch(&p, e, &path).unwrap();
        assert!((sampled.last().unwrap().1 + path.seed).norm() < 1e-12);
    }

    #[test]
    fn monodromy_around_pair() {
        let p = Potential::ix2();
        let e = c(0.0, 1.0);
        let path = BranchedPath::principal(&p, e, circle(c(0.0, 0.0), 2.0, 64), Anchor::Start, 0.0)
            .unwrap();
        let branch = Branch::new(&p, e, &path).unwrap();
        assert!((branch.at_end() - path.seed).norm() < 1e-12);
        let sampled = continue_branch(&p, e, &path).unwrap();
        assert!((sampled.last().unwrap().1 - path.seed).norm() < 1e-12);
    }

    #[test]
    fn collision_is_reported() {
        let p = Potential::ix2();
        let e = c(0.0, 0.25);
        let path = BranchedPath::principal(&p, e, vec![c(-1.0, 0.0), c(1.0, 0.0)], Anchor::Start, 0.0)
            .unwrap();
        assert!(matches!(
            action(&p, e, &path),
            Err(Error::BranchPointCollision { .. })
        ));
        assert!(matches!(
            continue_branch(&p, e, &path),
            Err(Error::BranchPointCollision { .. })
        ));
    }

    #[test]
    fn action_is_even_for_ix2() {
        let p = Potential::ix2();
        let e = c(4.0, 0.7);
        let x = c(0.8, 0.0);
        let seed = integrand_square(&p, e, 0.0, c(0.0, 0.0)).sqrt();
        let right = action(&p, e, &BranchedPath::straight(c(0.0, 0.0), x, seed, Anchor::Start, 0.0).unwrap())
            .unwrap();
        let left = action(&p, e, &BranchedPath::straight(c(0.0, 0.0), -x, seed, Anchor::Start, 0.0).unwrap())
            .unwrap();
        // S_{0,-x} = -S_{0,x} with matched seeds, so S_{0,x} = S_{-x,0}
        assert!((right + left).norm() < 1e-10);
    }

    #[test]
    fn endpoint_turning_point_integral() {
        // V = x^2 real, E = 1: int_{-1}^{1} sqrt(x^2 - 1) = i pi / 2 on the sheet that is
        // i sqrt(1 - x^2) at the origin.
        let p = Potential::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let path = BranchedPath::new(
            vec![c(-1.0, 0.0), c(1.0, 0.0)],
            c(0.0, 1.0),
            Anchor::FirstMidpoint,
            0.0,
        )
        .unwrap();
        let s = action(&p, c(1.0, 0.0), &path).unwrap();
        assert!((s - c(0.0, PI / 2.0)).norm() < 1e-11, "{s}");
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = Potential::ix2();
        let e = c(6.0, 0.4);
        let mk = |e: C| {
            BranchedPath::principal(&p, e, vec![c(-1.0, 0.0), c(1.0, 0.0)], Anchor::Start, 0.0).unwrap()
        };
        let d = action_derivative(&p, e, &mk(e)).unwrap();
        let h = 1e-5;
        let fd = (action(&p, e + h, &mk(e + h)).unwrap() - action(&p, e - h, &mk(e - h)).unwrap())
            / (2.0 * h);
        assert!((d - fd).norm() < 1e-7);
    }
}
