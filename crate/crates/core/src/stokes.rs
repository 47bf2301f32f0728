//! Stokes geometry: tracing the lines `Re int_alpha^x (V - E)^{1/2} = 0` from each turning
//! point, region connectivity, and membership in the set of energies admitting a progressive
//! path.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::contour::{
    self, integrand_square, nearest_root, Anchor, Branch, BranchedPath, TurningPointSet,
};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad;

pub type C = Complex64;

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max)
            || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// `[-4, 4]^2`.
    pub fn default_box() -> Self {
        Self {
            re_min: -4.0,
            re_max: 4.0,
            im_min: -4.0,
            im_max: 4.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn diam(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, x: C) -> bool {
        x.re >= self.re_min && x.re <= self.re_max && x.im >= self.im_min && x.im <= self.im_max
    }

    /// Smallest enlargement containing every point with the given margin around it.
    pub fn expanded_to(&self, points: &[C], margin: f64) -> Self {
        let mut r = *self;
        for p in points {
            r.re_min = r.re_min.min(p.re - margin);
            r.re_max = r.re_max.max(p.re + margin);
            r.im_min = r.im_min.min(p.im - margin);
            r.im_max = r.im_max.max(p.im + margin);
        }
        r
    }

    /// Parameter `t` in `[0, 1]` where the segment from an inside point `a` to `b` leaves.
    fn exit_parameter(&self, a: C, b: C) -> f64 {
        let mut t: f64 = 1.0;
        let d = b - a;
        if d.re > 0.0 {
            t = t.min((self.re_max - a.re) / d.re);
        } else if d.re < 0.0 {
            t = t.min((self.re_min - a.re) / d.re);
        }
        if d.im > 0.0 {
            t = t.min((self.im_max - a.im) / d.im);
        } else if d.im < 0.0 {
            t = t.min((self.im_min - a.im) / d.im);
        }
        t.clamp(0.0, 1.0)
    }
}

/// `s(x) = i conj(w)` for the branch value `w` of `(V + i s - E)^{1/2}` at `x`.
pub fn stokes_field(p: &Potential, e: C, shift: f64, x: C, branch: C) -> Result<C> {
    let f = integrand_square(p, e, shift, x);
    if f.norm() < 1e-12 {
        return Err(Error::AtTurningPoint(f.norm()));
    }
    Ok(C::i() * branch.conj())
}

pub fn stokes_field_unit(p: &Potential, e: C, shift: f64, x: C, branch: C) -> Result<C> {
    let s = stokes_field(p, e, shift, x, branch)?;
    Ok(s / s.norm())
}

/// Angles of the three Stokes lines leaving a simple turning point `alpha`.
pub fn departure_angles(p: &Potential, alpha: C) -> [f64; 3] {
    let dv = p.derivative().eval_poly(alpha);
    let phase = dv.sqrt().arg();
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        *o = (2.0 / 3.0) * (PI / 2.0 + k as f64 * PI - phase);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LineEnd {
    Boundary,
    TurningPoint(usize),
    ArcLength,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StokesLine {
    pub source: usize,
    pub direction_index: usize,
    pub direction: f64,
    #[serde(skip)]
    pub points: Vec<C>,
    /// Branch value of the root at each point (zero at the source).
    #[serde(skip)]
    pub branch: Vec<C>,
    pub end: LineEnd,
    pub arc_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesDiagram {
    pub energy: C,
    pub shift: f64,
    pub turning_points: TurningPointSet,
    pub lines: Vec<StokesLine>,
    pub bbox: Rect,
}

impl StokesDiagram {
    /// True when some line stopped at the box edge.
    pub fn truncated(&self) -> bool {
        self.lines.iter().any(|l| l.end == LineEnd::Boundary)
    }
}

const DEPARTURE_RADIUS: f64 = 1e-4;
const ARRIVAL_RADIUS: f64 = 1e-5;

/// Traces all Stokes lines for `V + i s` at energy `E`. The box is enlarged when needed so that
/// it contains every turning point and the interval endpoints `-1, 1`.
pub fn trace_diagram(p: &Potential, e: C, shift: f64, bbox: Rect) -> Result<StokesDiagram> {
    let tps = contour::turning_points(p, e, shift)?;
    if !tps.is_simple() {
        return Err(Error::DegenerateConfiguration(format!(
            "multiple turning point at E = {e}"
        )));
    }
    let locs = tps.locations();
    for i in 0..locs.len() {
        for j in i + 1..locs.len() {
            if (locs[i] - locs[j]).norm() < 1e-4 {
                return Err(Error::DegenerateConfiguration(format!(
                    "turning points {} and {} closer than 1e-4",
                    locs[i], locs[j]
                )));
            }
        }
    }
    let mut anchors = locs.clone();
    anchors.push(C::new(-1.0, 0.0));
    anchors.push(C::new(1.0, 0.0));
    let bbox = bbox.expanded_to(&anchors, 0.5);
    let mut lines = Vec::with_capacity(3 * locs.len());
    for (src, &alpha) in locs.iter().enumerate() {
        for (k, theta) in departure_angles(p, alpha).into_iter().enumerate() {
            let mut line = trace_line(p, e, shift, &locs, src, theta, &bbox)?;
            line.direction_index = k;
            lines.push(line);
        }
    }
    Ok(StokesDiagram {
        energy: e,
        shift,
        turning_points: tps,
        lines,
        bbox,
    })
}

fn dopri_step<F: FnMut(C) -> C>(f: &mut F, x: C, h: f64) -> (C, f64) {
    let k1 = f(x);
    let k2 = f(x + k1 * (h / 5.0));
    let k3 = f(x + (k1 * (3.0 / 40.0) + k2 * (9.0 / 40.0)) * h);
    let k4 = f(x + (k1 * (44.0 / 45.0) - k2 * (56.0 / 15.0) + k3 * (32.0 / 9.0)) * h);
    let k5 = f(x
        + (k1 * (19372.0 / 6561.0) - k2 * (25360.0 / 2187.0) + k3 * (64448.0 / 6561.0)
            - k4 * (212.0 / 729.0))
            * h);
    let k6 = f(x
        + (k1 * (9017.0 / 3168.0) - k2 * (355.0 / 33.0)
            + k3 * (46732.0 / 5247.0)
            + k4 * (49.0 / 176.0)
            - k5 * (5103.0 / 18656.0))
            * h);
    let x5 = x + (k1 * (35.0 / 384.0) + k3 * (500.0 / 1113.0) + k4 * (125.0 / 192.0)
        - k5 * (2187.0 / 6784.0)
        + k6 * (11.0 / 84.0))
        * h;
    let k7 = f(x5);
    let x4 = x + (k1 * (5179.0 / 57600.0) + k3 * (7571.0 / 16695.0) + k4 * (393.0 / 640.0)
        - k5 * (92097.0 / 339200.0)
        + k6 * (187.0 / 2100.0)
        + k7 * (1.0 / 40.0))
        * h;
    (x5, (x5 - x4).norm())
}

/// `int w` over the chord `[a, b]` with the branch interpolated between `wa` and `wb`.
fn chord_integral(p: &Potential, e: C, shift: f64, a: C, b: C, wa: C, wb: C) -> C {
    let d = b - a;
    let mut f = |t: f64| {
        let x = a + d * t;
        nearest_root(integrand_square(p, e, shift, x), wa + (wb - wa) * t) * d
    };
    quad::gk15(&mut f, 0.0, 1.0).0
}

fn segment_distance(x: C, a: C, b: C) -> f64 {
    let d = b - a;
    if d.norm_sqr() == 0.0 {
        return (x - a).norm();
    }
    let t = (((x - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (a + d * t - x).norm()
}

fn trace_line(
    p: &Potential,
    e: C,
    shift: f64,
    tps: &[C],
    src: usize,
    theta: f64,
    bbox: &Rect,
) -> Result<StokesLine> {
    let alpha = tps[src];
    let dir = C::from_polar(1.0, theta);
    let diam = bbox.diam();
    let h_max = 1e-3 * diam;
    let max_arc = 10.0 * diam;
    let f = |x: C| integrand_square(p, e, shift, x);

    let mut x = alpha + dir * DEPARTURE_RADIUS;
    let r = f(x).sqrt();
    // orient the branch so that the field points away from the source
    let mut w = if (C::i() * r.conj() * dir.conj()).re >= 0.0 {
        r
    } else {
        -r
    };
    let seed_path = BranchedPath::new(vec![alpha, x], w, Anchor::End, shift)?;
    let mut z = Branch::new(p, e, &seed_path)?.integrate(|_, w| w, 1e-14)?;
    let mut points = vec![alpha, x];
    let mut branch = vec![C::new(0.0, 0.0), w];
    let mut arc = DEPARTURE_RADIUS;
    let mut h = 0.25 * DEPARTURE_RADIUS;
    let tol = 1e-10;
    let mut end = LineEnd::ArcLength;
    let mut steps = 0usize;

    while arc < max_arc {
        steps += 1;
        if steps > 2_000_000 {
            end = LineEnd::Stalled;
            break;
        }
        let dist_tp = tps
            .iter()
            .map(|t| (x - t).norm())
            .fold(f64::INFINITY, f64::min);
        h = h.min(h_max).min(0.25 * dist_tp);
        if h < 1e-13 {
            end = LineEnd::Stalled;
            break;
        }
        let w_ref = w;
        let mut field = |y: C| {
            let v = nearest_root(f(y), w_ref);
            let s = C::i() * v.conj();
            let n = s.norm();
            if n == 0.0 {
                C::new(0.0, 0.0)
            } else {
                s / n
            }
        };
        let (x_new, err) = dopri_step(&mut field, x, h);
        if err > tol {
            h *= (0.9 * (tol / err).powf(0.2)).max(0.2);
            continue;
        }
        let w_new = nearest_root(f(x_new), w);
        if (w_new - w).norm() >= w.norm() {
            h *= 0.5;
            continue;
        }
        z += chord_integral(p, e, shift, x, x_new, w, w_new);
        let mut x_next = x_new;
        let mut w_next = w_new;
        let wn2 = w_next.norm_sqr();
        if wn2 > 0.0 {
            let mut dx = -z.re * w_next.conj() / wn2;
            let cap = 0.1 * h;
            if dx.norm() > cap {
                dx *= cap / dx.norm();
            }
            x_next += dx;
            let w_proj = nearest_root(f(x_next), w_next);
            z += 0.5 * (w_next + w_proj) * dx;
            w_next = w_proj;
        }
        // arrival at another turning point
        if let Some(j) = tps.iter().enumerate().position(|(j, t)| {
            (j != src || arc > 100.0 * DEPARTURE_RADIUS)
                && segment_distance(*t, x, x_next) < ARRIVAL_RADIUS
        }) {
            arc += (tps[j] - x).norm();
            points.push(tps[j]);
            branch.push(C::new(0.0, 0.0));
            end = LineEnd::TurningPoint(j);
            break;
        }
        if !bbox.contains(x_next) {
            let t = bbox.exit_parameter(x, x_next);
            let xb = x + (x_next - x) * t;
            arc += (xb - x).norm();
            points.push(xb);
            branch.push(nearest_root(f(xb), w));
            end = LineEnd::Boundary;
            break;
        }
        arc += (x_next - x).norm();
        x = x_next;
        w = w_next;
        points.push(x);
        branch.push(w);
        h *= (0.9 * (tol / err.max(1e-300)).powf(0.2)).clamp(1.0, 2.0);
    }
    Ok(StokesLine {
        source: src,
        direction_index: 0,
        direction: theta,
        points,
        branch,
        end,
        arc_length: arc,
    })
}

/// Connectivity of the complement of the traced lines inside the diagram box, resolved on a
/// fine node grid whose edges are cut by exact segment intersection tests.
pub struct RegionMap {
    bbox: Rect,
    n: usize,
    dx: f64,
    dy: f64,
    segments: Vec<(C, C)>,
    buckets: Vec<Vec<u32>>,
    component: Vec<u32>,
}

fn orient(a: C, b: C, c: C) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn segments_cross(p1: C, p2: C, q1: C, q2: C) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: C, b: C, c: C, d: f64| {
        d == 0.0
            && c.re >= a.re.min(b.re)
            && c.re <= a.re.max(b.re)
            && c.im >= a.im.min(b.im)
            && c.im <= a.im.max(b.im)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn find(&mut self, mut i: u32) -> u32 {
        while self.0[i as usize] != i {
            let parent = self.0[i as usize];
            self.0[i as usize] = self.0[parent as usize];
            i = parent;
        }
        i
    }
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra as usize] = rb;
        }
    }
}

impl RegionMap {
    pub fn new(d: &StokesDiagram, n: usize) -> Self {
        let bbox = d.bbox;
        let n = n.max(8);
        let dx = bbox.width() / n as f64;
        let dy = bbox.height() / n as f64;
        let segments: Vec<(C, C)> = d
            .lines
            .iter()
            .flat_map(|l| l.points.windows(2).map(|w| (w[0], w[1])))
            .collect();
        let mut map = Self {
            bbox,
            n,
            dx,
            dy,
            segments,
            buckets: vec![Vec::new(); n * n],
            component: Vec::new(),
        };
        for (id, &(a, b)) in map.segments.iter().enumerate() {
            let (i0, j0) = map.cell(C::new(a.re.min(b.re), a.im.min(b.im)));
            let (i1, j1) = map.cell(C::new(a.re.max(b.re), a.im.max(b.im)));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    map.buckets[j * n + i].push(id as u32);
                }
            }
        }
        let nodes = (n + 1) * (n + 1);
        let mut uf = UnionFind((0..nodes as u32).collect());
        for j in 0..=n {
            for i in 0..=n {
                let here = map.node(i, j);
                if i < n && !map.blocked(here, map.node(i + 1, j)) {
                    uf.union(map.node_id(i, j), map.node_id(i + 1, j));
                }
                if j < n && !map.blocked(here, map.node(i, j + 1)) {
                    uf.union(map.node_id(i, j), map.node_id(i, j + 1));
                }
            }
        }
        map.component = (0..nodes as u32).map(|k| uf.find(k)).collect();
        map
    }

    fn node(&self, i: usize, j: usize) -> C {
        C::new(
            self.bbox.re_min + i as f64 * self.dx,
            self.bbox.im_min + j as f64 * self.dy,
        )
    }

    fn node_id(&self, i: usize, j: usize) -> u32 {
        (j * (self.n + 1) + i) as u32
    }

    fn cell(&self, x: C) -> (usize, usize) {
        let fi = ((x.re - self.bbox.re_min) / self.dx).floor();
        let fj = ((x.im - self.bbox.im_min) / self.dy).floor();
        let clamp = |v: f64| (v.max(0.0) as usize).min(self.n - 1);
        (clamp(fi), clamp(fj))
    }

    fn blocked(&self, a: C, b: C) -> bool {
        let (i0, j0) = self.cell(C::new(a.re.min(b.re), a.im.min(b.im)));
        let (i1, j1) = self.cell(C::new(a.re.max(b.re), a.im.max(b.im)));
        for i in i0.saturating_sub(1)..=(i1 + 1).min(self.n - 1) {
            for j in j0.saturating_sub(1)..=(j1 + 1).min(self.n - 1) {
                for &id in &self.buckets[j * self.n + i] {
                    let (p, q) = self.segments[id as usize];
                    if segments_cross(a, b, p, q) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Distance from `x` to the nearest traced line.
    pub fn distance_to_lines(&self, x: C) -> f64 {
        self.segments
            .iter()
            .map(|&(a, b)| segment_distance(x, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Region label of a point, or `OnBoundary` when it lies within `1e-6` of a line.
    pub fn region_of(&self, x: C) -> Result<u32> {
        if self.distance_to_lines(x) < 1e-6 {
            return Err(Error::OnBoundary(x));
        }
        if !self.bbox.contains(x) {
            return Err(Error::InvalidArgument(format!("point {x} outside the diagram box")));
        }
        let (ci, cj) = self.cell(x);
        let mut best: Option<(f64, u32)> = None;
        for ring in 0..4usize {
            let lo_i = ci.saturating_sub(ring);
            let lo_j = cj.saturating_sub(ring);
            let hi_i = (ci + 1 + ring).min(self.n);
            let hi_j = (cj + 1 + ring).min(self.n);
            for i in lo_i..=hi_i {
                for j in lo_j..=hi_j {
                    let c = self.node(i, j);
                    if self.blocked(x, c) {
                        continue;
                    }
                    let d = (c - x).norm();
                    if best.map(|(bd, _)| d < bd).unwrap_or(true) {
                        best = Some((d, self.component[self.node_id(i, j) as usize]));
                    }
                }
            }
            if let Some((_, comp)) = best {
                return Ok(comp);
            }
        }
        Err(Error::OnBoundary(x))
    }
}

const REGION_RESOLUTION: usize = 512;

/// Whether all points lie in one connected component of the complement of the traced lines.
pub fn same_region(d: &StokesDiagram, points: &[C]) -> Result<bool> {
    if points.len() <= 1 {
        return Ok(true);
    }
    let map = RegionMap::new(d, REGION_RESOLUTION);
    let first = map.region_of(points[0])?;
    for &x in &points[1..] {
        if map.region_of(x)? != first {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A progressive path exists.
    Inside,
    /// The energy lies on one of the limit-spectrum curves.
    Outside,
    /// A defining inequality is within tolerance of equality.
    Boundary,
    /// No decision: no witness and no applicable condition table.
    Unknown,
}

/// One evaluated condition, e.g. `Re S_{a+,1} = 0 and Im S_{a+,1} <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub name: String,
    /// The quantity that must vanish.
    pub equality: f64,
    /// The quantity whose sign is constrained, if any.
    pub inequality: Option<f64>,
    /// The inequality part alone holds (within tolerance), so a sign change of `equality`
    /// between nearby energies means the condition's curve passes between them.
    pub sign_ok: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideVerdict {
    pub x0: f64,
    pub x1: f64,
    pub shift: f64,
    pub verdict: Verdict,
    pub same_region: Option<bool>,
    pub conditions: Vec<Condition>,
    #[serde(skip)]
    pub witness: Option<Vec<C>>,
    /// `min Re(w dx)/|dx|` along the witness.
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub verdict: Verdict,
    pub sides: Vec<SideVerdict>,
}

impl MembershipVerdict {
    /// `Some(true)` when a progressive path exists on every side, `Some(false)` when some side
    /// is on a limit curve, `None` otherwise.
    pub fn in_t(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Inside => Some(true),
            Verdict::Outside => Some(false),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<Vec<Vec<C>>> {
        self.sides.iter().map(|s| s.witness.clone()).collect()
    }
}

const EQ_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct MembershipOptions {
    pub bbox: Rect,
    pub witness: bool,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        Self {
            bbox: Rect::default_box(),
            witness: true,
        }
    }
}

/// Decides whether a progressive path exists from `-1` to `1` for the operator with potential
/// `V` perturbed by `-i delta` left of `beta` and `+i delta` right of it.
pub fn progressive_path(
    p: &Potential,
    e: C,
    delta: f64,
    beta: Option<f64>,
) -> Result<MembershipVerdict> {
    let q = match (delta, beta) {
        (d, _) if d == 0.0 => p.clone(),
        (d, Some(b)) => p.with_symmetric_jump(b, d)?,
        (_, None) => {
            return Err(Error::InvalidArgument(
                "a nonzero delta needs a jump location beta".into(),
            ))
        }
    };
    membership(&q, e, &MembershipOptions::default())
}

/// Runs the side procedure on every smooth piece of `p` and combines the verdicts.
pub fn membership(p: &Potential, e: C, opts: &MembershipOptions) -> Result<MembershipVerdict> {
    if e.norm() == 0.0 {
        return Err(Error::InvalidArgument("energy must be nonzero".into()));
    }
    let mut sides = Vec::new();
    for piece in p.pieces() {
        sides.push(side_membership(p, e, piece.left, piece.right, piece.shift, opts)?);
    }
    let verdict = if sides.iter().any(|s| s.verdict == Verdict::Outside) {
        Verdict::Outside
    } else if sides.iter().any(|s| s.verdict == Verdict::Boundary) {
        Verdict::Boundary
    } else if sides.iter().any(|s| s.verdict == Verdict::Unknown) {
        Verdict::Unknown
    } else {
        Verdict::Inside
    };
    Ok(MembershipVerdict { verdict, sides })
}

fn is_ix2(p: &Potential) -> bool {
    let c = p.coeffs();
    c.len() == 3 && c[0].norm() == 0.0 && c[1].norm() == 0.0 && c[2] == C::new(0.0, 1.0)
}

/// Action between two real points along a straight segment, detouring through the upper or
/// lower half plane when a turning point sits on the segment.
pub fn real_segment_action(p: &Potential, e: C, x0: f64, x1: f64, shift: f64) -> Result<C> {
    let a = C::new(x0, 0.0);
    let b = C::new(x1, 0.0);
    let straight = BranchedPath::principal(p, e, vec![a, b], Anchor::Start, shift)?;
    match contour::action(p, e, &straight) {
        Err(Error::BranchPointCollision { .. }) => {
            let mid = 0.5 * (a + b) + C::new(0.0, 0.05 * (x1 - x0).abs());
            let path = BranchedPath::principal(p, e, vec![a, mid, b], Anchor::Start, shift)?;
            contour::action(p, e, &path)
        }
        other => other,
    }
}

fn side_membership(
    p: &Potential,
    e: C,
    x0: f64,
    x1: f64,
    shift: f64,
    opts: &MembershipOptions,
) -> Result<SideVerdict> {
    let a = C::new(x0, 0.0);
    let b = C::new(x1, 0.0);
    let bbox = opts.bbox.expanded_to(&[a, b], 0.5);
    let diagram = trace_diagram(p, e, shift, bbox)?;
    let mut out = SideVerdict {
        x0,
        x1,
        shift,
        verdict: Verdict::Unknown,
        same_region: None,
        conditions: Vec::new(),
        witness: None,
        margin: None,
    };
    let map = RegionMap::new(&diagram, REGION_RESOLUTION);
    let regions = (map.region_of(a), map.region_of(b));
    let (ra, rb) = match regions {
        (Ok(ra), Ok(rb)) => (ra, rb),
        (Err(Error::OnBoundary(_)), _) | (_, Err(Error::OnBoundary(_))) => {
            out.verdict = Verdict::Boundary;
            return Ok(out);
        }
        (Err(err), _) | (_, Err(err)) => return Err(err),
    };
    let same = ra == rb;
    out.same_region = Some(same);

    let s01 = real_segment_action(p, e, x0, x1, shift)?;
    let table = !same && shift == 0.0 && x0 == -1.0 && x1 == 1.0 && is_ix2(p);
    if same {
        let holds = s01.re.abs() <= EQ_TOL;
        out.conditions.push(Condition {
            name: format!("Re S[{x0},{x1}] = 0"),
            equality: s01.re,
            inequality: None,
            sign_ok: true,
            holds,
        });
        out.verdict = if holds { Verdict::Outside } else { Verdict::Inside };
    } else if table {
        out.conditions = ix2_conditions(p, e)?;
        out.verdict = classify(&out.conditions);
    }
    if opts.witness && out.verdict != Verdict::Outside {
        let kappa = if same {
            let scale: f64 = 2.0 * (e.norm() + p.max_abs_on_interval()).sqrt() * (x1 - x0).abs();
            (0.25 * s01.re.abs() / scale.max(1e-300)).min(0.05)
        } else {
            0.05
        };
        if let Some((path, margin)) = find_witness(p, e, shift, a, b, kappa) {
            out.witness = Some(path);
            out.margin = Some(margin);
            if out.verdict == Verdict::Unknown {
                out.verdict = Verdict::Inside;
            }
        }
    }
    Ok(out)
}

fn classify(conds: &[Condition]) -> Verdict {
    if conds.iter().any(|c| c.holds) {
        return Verdict::Outside;
    }
    let near = conds.iter().any(|c| {
        c.equality.abs() <= EQ_TOL && c.inequality.map(|v| v.abs() <= EQ_TOL).unwrap_or(false)
    });
    if near {
        Verdict::Boundary
    } else {
        Verdict::Inside
    }
}

/// `alpha_+ = (-iE)^{1/2}` (principal root) and `alpha_- = -alpha_+` for `V = i x^2`.
pub fn ix2_turning_points(e: C) -> (C, C) {
    let ap = (-C::i() * e).sqrt();
    (-ap, ap)
}

/// The determination with `w(1) = -i (E - V(1))^{1/2}`.
pub fn ix2_seed_at_one(e: C) -> C {
    -C::i() * (e - C::i()).sqrt()
}

/// `S_{alpha_+, 1}`, `S_{alpha_-, 1}` and `S_{alpha_-, alpha_+}` for `V = i x^2` in the
/// determination fixed by [`ix2_seed_at_one`].
pub fn ix2_actions(p: &Potential, e: C) -> Result<(C, C, C)> {
    let (am, ap) = ix2_turning_points(e);
    let one = C::new(1.0, 0.0);
    let seed = ix2_seed_at_one(e);
    let s_p1 = contour::action(p, e, &BranchedPath::new(vec![ap, one], seed, Anchor::End, 0.0)?)?;
    let s_m1 = contour::action(p, e, &BranchedPath::new(vec![am, one], seed, Anchor::End, 0.0)?)?;
    let s_mp = contour::action(
        p,
        e,
        &BranchedPath::principal(p, e, vec![am, ap], Anchor::FirstMidpoint, 0.0)?,
    )?;
    Ok((s_p1, s_m1, s_mp))
}

fn ix2_conditions(p: &Potential, e: C) -> Result<Vec<Condition>> {
    let (s_p1, s_m1, s_mp) = ix2_actions(p, e)?;
    // `holds` demands the inequality strictly beyond the tolerance; the edge case is left to
    // `classify`, which reports it as a boundary.
    let cond = |name: &str, eq: f64, ineq: f64, le: bool| Condition {
        name: name.into(),
        equality: eq,
        inequality: Some(ineq),
        sign_ok: if le { ineq <= EQ_TOL } else { ineq >= -EQ_TOL },
        holds: eq.abs() <= EQ_TOL && if le { ineq < -EQ_TOL } else { ineq > EQ_TOL },
    };
    let out = vec![
        cond("Re S[a-,a+] = 0, Re S[a+,1] <= 0", s_mp.re, s_p1.re, true),
        cond("Re S[a+,1] = 0, Im S[a+,1] <= 0", s_p1.re, s_p1.im, true),
        cond("Re S[a-,1] = 0, Im S[a-,1] >= 0", s_m1.re, s_m1.im, false),
    ];
    Ok(out)
}

/// Greedy search for a path from `a` to `b` along which `Re z` strictly increases: steps of
/// `1e-3` toward the target, deflected into the cone `Re(w u) >= kappa |w|`. Both sheets are
/// tried. Returns the path and its smallest normalized increment.
pub fn find_witness(
    p: &Potential,
    e: C,
    shift: f64,
    a: C,
    b: C,
    kappa: f64,
) -> Option<(Vec<C>, f64)> {
    let f = |x: C| integrand_square(p, e, shift, x);
    let tps = contour::turning_points(p, e, shift)
        .map(|t| t.locations())
        .unwrap_or_default();
    let step = 1e-3;
    let open = kappa.clamp(1e-6, 0.999).acos();
    let length = (b - a).norm();
    let max_steps = (20.0 * length / step) as usize + 10_000;
    let w0 = f(a).sqrt();
    if w0.norm() == 0.0 {
        return None;
    }
    for sign in [1.0, -1.0] {
        let mut w = w0 * sign;
        let mut x = a;
        let mut path = vec![a];
        let mut best_dist = length;
        let mut since_best = 0usize;
        let mut ok = false;
        for _ in 0..max_steps {
            let to_target = b - x;
            let dist = to_target.norm();
            if dist <= step {
                let wm = nearest_root(f(0.5 * (x + b)), w);
                if (wm * to_target).re > 0.0 {
                    path.push(b);
                    ok = true;
                }
                break;
            }
            let ascent = w.conj() / w.norm();
            let d = to_target / dist;
            let psi = (d / ascent).arg();
            let u = ascent * C::from_polar(1.0, psi.clamp(-open, open));
            let x_new = x + u * step;
            if tps.iter().any(|t| (x_new - t).norm() < 2.0 * step) {
                break;
            }
            let w_new = nearest_root(f(x_new), w);
            x = x_new;
            w = w_new;
            path.push(x);
            if dist < best_dist - 1e-3 * step {
                best_dist = dist;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > 2000 {
                    break;
                }
            }
        }
        if ok {
            if let Some(margin) = witness_margin(p, e, shift, &path, w0 * sign) {
                return Some((path, margin));
            }
        }
    }
    None
}

/// Smallest `Re(w(mid) dx)/|dx|` along a polyline, or `None` if some increment is not positive.
pub fn witness_margin(p: &Potential, e: C, shift: f64, path: &[C], seed: C) -> Option<f64> {
    let f = |x: C| integrand_square(p, e, shift, x);
    let mut w = nearest_root(f(path[0]), seed);
    let mut margin = f64::INFINITY;
    for seg in path.windows(2) {
        let dx = seg[1] - seg[0];
        let wm = nearest_root(f(0.5 * (seg[0] + seg[1])), w);
        let inc = (wm * dx).re / dx.norm();
        if !(inc > 0.0) {
            return None;
        }
        margin = margin.min(inc);
        w = nearest_root(f(seg[1]), wm);
    }
    Some(margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn field_examples() {
        let zero = Potential::polynomial(vec![]);
        let s = stokes_field(&zero, c(-1.0, 0.0), 0.0, c(0.3, 0.0), c(1.0, 0.0)).unwrap();
        assert!((s - C::i()).norm() < 1e-15);
        let w = C::from_polar(1.0, PI / 4.0);
        let s = stokes_field(&Potential::ix2(), c(0.0, 0.0), 0.0, c(1.0, 0.0), w).unwrap();
        assert!((s - w).norm() < 1e-15);
        assert!(matches!(
            stokes_field(&Potential::ix2(), c(0.0, 1.0), 0.0, c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::AtTurningPoint(_))
        ));
    }

    #[test]
    fn field_is_tangent_to_level_sets() {
        let p = Potential::ix2();
        let e = c(3.0, 0.5);
        for x in [c(0.2, 0.1), c(-0.7, 0.4), c(1.5, -1.0)] {
            let w = integrand_square(&p, e, 0.0, x).sqrt();
            let s = stokes_field(&p, e, 0.0, x, w).unwrap();
            assert!((w * s).re.abs() < 1e-14 * w.norm_sqr().max(1.0));
        }
    }

    #[test]
    fn departures_are_spaced_by_two_thirds_pi() {
        let angles = departure_angles(&Potential::ix2(), c(0.3, -0.8));
        for (i, j) in [(0, 1), (1, 2)] {
            assert!((angles[j] - angles[i] - 2.0 * PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn large_energy_endpoints_share_a_region() {
        let d = trace_diagram(&Potential::ix2(), c(50.0, 1.0 / 3.0), 0.0, Rect::default_box()).unwrap();
        assert!(same_region(&d, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap());
        assert!(same_region(&d, &[c(0.0, 0.0)]).unwrap());
    }

    #[test]
    fn small_energy_on_ray_separates_endpoints() {
        let e = C::from_polar(0.1, PI / 4.0);
        let d = trace_diagram(&Potential::ix2(), e, 0.0, Rect::default_box()).unwrap();
        assert!(!same_region(&d, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap());
    }

    #[test]
    fn double_turning_point_is_degenerate() {
        assert!(matches!(
            trace_diagram(&Potential::ix2(), c(0.0, 0.0), 0.0, Rect::default_box()),
            Err(Error::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn negative_energy_is_in_t() {
        let v = progressive_path(&Potential::ix2(), c(-1.0, 0.0), 0.0, None).unwrap();
        assert_eq!(v.in_t(), Some(true));
        // a Stokes line from each turning point crosses the real axis, yet the real axis is
        // itself progressive since Re (1 + i x^2)^{1/2} > 0
        assert_eq!(v.sides[0].same_region, Some(false));
        let s = real_segment_action(&Potential::ix2(), c(-1.0, 0.0), -1.0, 1.0, 0.0).unwrap();
        assert!(s.re > 0.0);
    }

    #[test]
    fn witness_is_monotone() {
        let p = Potential::ix2();
        let e = c(-1.0, 0.0);
        let v = progressive_path(&p, e, 0.0, None).unwrap();
        let path = v.sides[0].witness.as_ref().expect("witness for E = -1");
        assert_eq!(path[0], c(-1.0, 0.0));
        assert_eq!(*path.last().unwrap(), c(1.0, 0.0));
        let seed = integrand_square(&p, e, 0.0, path[0]).sqrt();
        let inc = witness_margin(&p, e, 0.0, path, seed).or_else(|| witness_margin(&p, e, 0.0, path, -seed));
        assert!(inc.unwrap() > 0.0);
    }
}
