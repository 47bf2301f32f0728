//! The end-to-end checks behind `stokescope verify`. Each criterion returns a report with one
//! row per measured quantity; a criterion passes when every row does.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::contour::{self, Anchor, BranchedPath};
use crate::curves::{self, distance_to_polyline, SpectralCurve};
use crate::error::{Error, Result};
use crate::io;
use crate::potential::Potential;
use crate::pseudospec;
use crate::solver::{self, wkb_formula, wkb_series};
use crate::stokes::{self, Rect, StokesDiagram, Verdict};

pub type C = Complex64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub measured: f64,
    pub expected: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub rows: Vec<Row>,
    pub error: Option<String>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    /// One summary line, e.g. `criterion 6 (y-shape): PASS`.
    pub fn summary(&self) -> String {
        format!(
            "criterion {} ({}): {}",
            self.id,
            self.name,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary())?;
        for r in &self.rows {
            writeln!(
                f,
                "  [{}] {:<58} measured {:>14.6e}  expected {}",
                if r.pass { "ok" } else { "!!" },
                r.quantity,
                r.measured,
                r.expected
            )?;
        }
        if let Some(e) = &self.error {
            writeln!(f, "  error: {e}")?;
        }
        Ok(())
    }
}

fn row_le(quantity: impl Into<String>, measured: f64, bound: f64) -> Row {
    Row {
        quantity: quantity.into(),
        measured,
        expected: format!("<= {bound:e}"),
        pass: measured <= bound,
    }
}

fn row_in(quantity: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Row {
    Row {
        quantity: quantity.into(),
        measured,
        expected: format!("in [{lo}, {hi}]"),
        pass: (lo..=hi).contains(&measured),
    }
}

fn row_bool(quantity: impl Into<String>, ok: bool) -> Row {
    Row {
        quantity: quantity.into(),
        measured: if ok { 1.0 } else { 0.0 },
        expected: "1 (true)".into(),
        pass: ok,
    }
}

fn report(id: u32, name: &'static str, run: impl FnOnce() -> Result<Vec<Row>>) -> CriterionReport {
    match run() {
        Ok(rows) => CriterionReport { id, name, rows, error: None },
        Err(e) => CriterionReport { id, name, rows: Vec::new(), error: Some(e.to_string()) },
    }
}

/// Criterion identifiers, names and the groups `--filter` understands.
pub const CRITERIA: [(u32, &str, &[&str]); 11] = [
    (1, "asymptote of Gamma(-1,1)", &["curves"]),
    (2, "second-order coefficient", &["curves"]),
    (3, "eigenvalue localization", &["eigs", "solver"]),
    (4, "quantization formula", &["eigs", "solver", "wkb"]),
    (5, "perturbation splitting", &["curves", "eigs", "solver"]),
    (6, "y-shape", &["curves"]),
    (7, "stokes geometry", &["stokes"]),
    (8, "membership consistency", &["stokes", "curves"]),
    (9, "wkb series scaling", &["wkb", "solver"]),
    (10, "pseudospectrum", &["pseudospec"]),
    (11, "two-jump limit", &["pseudospec", "curves"]),
];

/// Whether `filter` (a group, a criterion number, or a substring of a name) selects `id`.
pub fn selected(id: u32, filter: Option<&str>) -> bool {
    let Some(f) = filter.map(|f| f.trim().to_ascii_lowercase()) else {
        return true;
    };
    let Some(&(_, name, groups)) = CRITERIA.iter().find(|c| c.0 == id) else {
        return false;
    };
    f.trim_start_matches('c').parse::<u32>().map(|n| n == id).unwrap_or(false)
        || groups.contains(&f.as_str())
        || name.contains(f.as_str())
}

pub fn run_criterion(id: u32) -> CriterionReport {
    match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        _ => CriterionReport {
            id,
            name: "unknown",
            rows: Vec::new(),
            error: Some(format!("no criterion {id}")),
        },
    }
}

pub fn run(filter: Option<&str>) -> Vec<CriterionReport> {
    CRITERIA
        .iter()
        .filter(|c| selected(c.0, filter))
        .map(|c| run_criterion(c.0))
        .collect()
}

fn ix2() -> Potential {
    Potential::ix2()
}

pub fn criterion_1() -> CriterionReport {
    report(1, CRITERIA[0].1, || {
        let p = ix2();
        let curve = curves::trace_curve(&p, -1.0, 1.0, 0.0, 10.0, 100.0, 0.5)?;
        let b50 = curve.b_at(50.0).ok_or_else(|| Error::InvalidArgument("a = 50 not traced".into()))?;
        let target = 1.0 / 3.0 - 3.0 / (28.0 * 2500.0);
        let dev: Vec<f64> = curve.b().iter().map(|b| (b - 1.0 / 3.0).abs()).collect();
        let worst_rise = dev.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        Ok(vec![
            row_le("|b(50) - (1/3 - 3/(28*50^2))|", (b50 - target).abs(), 1e-4),
            Row {
                quantity: "largest increase of |b - 1/3| on [10, 100]".into(),
                measured: worst_rise,
                expected: "< 0 (strictly decreasing)".into(),
                pass: worst_rise < 0.0,
            },
        ])
    })
}

/// Intercept of the line through `(1/a^2, a^2 (b - 1/3))`.
pub fn second_order_fit(p: &Potential) -> Result<f64> {
    let a_vals = [25.0, 50.0, 100.0];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for a in a_vals {
        let b = curves::curve_point(p, -1.0, 1.0, 0.0, a, 1.0 / 3.0)?;
        xs.push(1.0 / (a * a));
        ys.push(a * a * (b - 1.0 / 3.0));
    }
    Ok(pseudospec::linear_extrapolation(&xs, &ys))
}

pub fn criterion_2() -> CriterionReport {
    report(2, CRITERIA[1].1, || {
        let fit = second_order_fit(&ix2())?;
        let target = -3.0 / 28.0;
        Ok(vec![Row {
            quantity: "fitted a^2 (b - 1/3), a in {25, 50, 100}".into(),
            measured: fit,
            expected: format!("{target:.6} within 5%"),
            pass: ((fit - target) / target).abs() <= 0.05,
        }])
    })
}

fn window(re_min: f64, re_max: f64) -> Rect {
    Rect::new(re_min, re_max, -2.0, 3.0).expect("valid window")
}

/// Largest distance from the filtered matrix eigenvalues in `5 <= Re E <= 30` to a curve.
fn max_distance(p: &Potential, h: f64, n: usize, curve: &SpectralCurve) -> Result<(f64, usize)> {
    let eigs = solver::eigenvalues(p, h, n, Some(window(5.0, 30.0)))?;
    let d = eigs
        .iter()
        .map(|r| curve.distance(r.e))
        .fold(0.0, f64::max);
    Ok((d, eigs.len()))
}

pub fn criterion_3() -> CriterionReport {
    report(3, CRITERIA[2].1, || {
        let p = ix2();
        let curve = curves::trace_curve(&p, -1.0, 1.0, 0.0, 3.0, 32.0, 0.05)?;
        let h = 0.02;
        let (d1, n1) = max_distance(&p, h, 384, &curve)?;
        // the finer h needs proportionally more nodes to resolve the same energies
        let (d2, n2) = max_distance(&p, h / 2.0, 768, &curve)?;
        Ok(vec![
            row_bool(format!("filtered eigenvalues found at h = 0.02 ({n1}) and 0.01 ({n2})"), n1 > 0 && n2 > 0),
            row_le("max dist to Gamma(-1,1), h = 0.02", d1, 5.0 * h),
            row_in("distance ratio h = 0.01 / h = 0.02", d2 / d1, 0.3, 0.7),
        ])
    })
}

pub fn criterion_4() -> CriterionReport {
    report(4, CRITERIA[3].1, || {
        let p = ix2();
        let h = 0.02;
        let mut rows = Vec::new();
        let mut errs = Vec::new();
        for k in [80i64, 100, 120] {
            let seed = wkb_formula(&p, h, k)?;
            let e = solver::refine(&p, h, seed)?.e;
            let err = (e - seed).norm();
            let bound = 10.0 / (h * k as f64).powi(3);
            rows.push(row_le(format!("|wkb_formula - refine|, k = {k}"), err, bound));
            errs.push(err);
        }
        rows.push(row_bool("error decreases with k", errs.windows(2).all(|w| w[1] < w[0])));
        Ok(rows)
    })
}

pub fn criterion_5() -> CriterionReport {
    report(5, CRITERIA[4].1, || {
        let (delta, beta, h) = (0.1, 0.3, 0.02);
        let p = ix2().with_symmetric_jump(beta, delta)?;
        // the polynomial part already carries -i delta; each side adds its own jump shift
        let pieces = p.pieces();
        let left = curves::trace_curve(&p, -1.0, beta, pieces[0].shift, 3.5, 60.0, 0.05)?;
        let right = curves::trace_curve(&p, beta, 1.0, pieces[1].shift, 3.5, 60.0, 0.05)?;
        let bl = left.b_at(50.0).unwrap_or(f64::NAN);
        let br = right.b_at(50.0).unwrap_or(f64::NAN);
        let eigs = solver::eigenvalues(&p, h, 384, Some(window(5.0, 30.0)))?;
        let (mut nl, mut nr, mut worst) = (0usize, 0usize, 0.0f64);
        for r in &eigs {
            let (dl, dr) = (left.distance(r.e), right.distance(r.e));
            if dl <= dr {
                nl += 1;
            } else {
                nr += 1;
            }
            worst = worst.max(dl.min(dr));
        }
        Ok(vec![
            row_le("|b(50) - 0.163333| on Gamma(-1,beta)", (bl - 0.163333).abs(), 5e-3),
            row_le("|b(50) - 0.563333| on Gamma(beta,1)", (br - 0.563333).abs(), 5e-3),
            row_bool(format!("both clusters nonempty ({nl} left, {nr} right)"), nl > 0 && nr > 0),
            row_le("max dist of an eigenvalue to its curve", worst, 5.0 * h),
        ])
    })
}

pub fn criterion_6() -> CriterionReport {
    report(6, CRITERIA[5].1, || {
        let y = curves::y_shape(0.01)?;
        let fixtures = io::load_oracles(&io::fixture_dir())?;
        let target = C::from_polar(fixtures.lambda0, FRAC_PI_4);
        let ends = [
            ("ray end", y.ray.last()),
            ("Gamma(alpha+,1) end", y.alpha_plus_one.last()),
            ("Gamma(-1,1) start", y.minus_one_one.first()),
        ];
        let mut rows: Vec<Row> = ends
            .iter()
            .map(|(name, z)| row_le(format!("{name}: distance to lambda0 e^(i pi/4)"), (z - target).norm(), 1e-3))
            .collect();
        rows.push(row_le("|lambda0 - fixture|", (y.lambda0 - fixtures.lambda0).abs(), 1e-8));
        rows.push(row_le(
            "Gamma(alpha+,1) start: distance to i",
            (y.alpha_plus_one.first() - C::i()).norm(),
            1e-6,
        ));
        Ok(rows)
    })
}

/// Angle at which a traced line leaves its turning point, read off the first sample at
/// distance `radius`.
fn measured_departure(line: &stokes::StokesLine, radius: f64) -> Option<f64> {
    let alpha = line.points[0];
    line.points
        .iter()
        .find(|x| (**x - alpha).norm() >= radius)
        .map(|x| (x - alpha).arg())
}

/// `max |Re S| / (1 + arc length)` along the lines, with `S` accumulated segment by segment.
pub fn max_action_drift(p: &Potential, d: &StokesDiagram) -> Result<f64> {
    let mut worst = 0.0f64;
    for line in &d.lines {
        let pts = &line.points;
        let mut s = contour::action(
            p,
            d.energy,
            &BranchedPath::straight(pts[0], pts[1], line.branch[1], Anchor::End, d.shift)?,
        )?;
        let mut arc = (pts[1] - pts[0]).norm();
        for j in 1..pts.len() - 1 {
            let seg = BranchedPath::straight(pts[j], pts[j + 1], line.branch[j], Anchor::Start, d.shift)?;
            s += contour::action(p, d.energy, &seg)?;
            arc += (pts[j + 1] - pts[j]).norm();
            worst = worst.max(s.re.abs() / (1.0 + arc));
        }
    }
    Ok(worst)
}

/// Directed Hausdorff distance from the sampled points of `a` inside the disk `|x| <= r` to
/// the polylines of `b`.
fn directed_hausdorff(a: &[Vec<C>], b: &[Vec<C>], r: f64) -> f64 {
    let mut worst = 0.0f64;
    for line in a {
        for &x in line.iter().filter(|x| x.norm() <= r) {
            let d = b.iter().map(|l| distance_to_polyline(l, x)).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    worst
}

pub fn criterion_7() -> CriterionReport {
    report(7, CRITERIA[6].1, || {
        let p = ix2();
        let mut rows = Vec::new();
        let energies = [C::from_polar(1.0, FRAC_PI_4), C::new(10.0, 1.0), C::new(2.0, 0.5)];
        let mut worst_angle = 0.0f64;
        let mut counts_ok = true;
        let mut drift = 0.0f64;
        for &e in &energies {
            let d = stokes::trace_diagram(&p, e, 0.0, Rect::default_box())?;
            for src in 0..d.turning_points.points.len() {
                let lines: Vec<_> = d.lines.iter().filter(|l| l.source == src).collect();
                counts_ok &= lines.len() == 3;
                let mut angles: Vec<f64> = lines.iter().filter_map(|l| measured_departure(l, 1e-2)).collect();
                counts_ok &= angles.len() == 3;
                angles.sort_by(f64::total_cmp);
                for k in 0..angles.len() {
                    let next = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + 2.0 * PI };
                    worst_angle = worst_angle.max((next - angles[k] - 2.0 * PI / 3.0).abs());
                }
            }
            drift = drift.max(max_action_drift(&p, &d)?);
        }
        rows.push(row_bool("three lines from every simple turning point", counts_ok));
        rows.push(row_le("max |departure gap - 2 pi/3| (rad)", worst_angle, 1e-2));
        rows.push(row_le("max |Re S| / (1 + arc length) along lines", drift, 1e-6));

        // i x^2 - e^{i pi/4} = e^{i pi/4} (y^2 - 1) with x = e^{-i pi/8} y
        let rotated_source = stokes::trace_diagram(
            &Potential::polynomial(vec![C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)]),
            C::new(1.0, 0.0),
            0.0,
            Rect::default_box(),
        )?;
        let target = stokes::trace_diagram(&p, C::from_polar(1.0, FRAC_PI_4), 0.0, Rect::default_box())?;
        let rot = C::from_polar(1.0, -FRAC_PI_8);
        let a: Vec<Vec<C>> = target.lines.iter().map(|l| l.points.clone()).collect();
        let b: Vec<Vec<C>> = rotated_source
            .lines
            .iter()
            .map(|l| l.points.iter().map(|x| x * rot).collect())
            .collect();
        let r = 3.5;
        let haus = directed_hausdorff(&a, &b, r).max(directed_hausdorff(&b, &a, r));
        rows.push(row_le("Hausdorff(E = e^(i pi/4), rotated x^2 at E = 1), |x| <= 3.5", haus, 1e-4));
        Ok(rows)
    })
}

/// Grid nodes of criterion 8: 40 x 20 over `[1, 20] x [-0.2, 0.9]`.
pub fn membership_grid() -> (Vec<f64>, Vec<f64>) {
    let re = (0..40).map(|i| 1.0 + 19.0 * i as f64 / 39.0).collect();
    let im = (0..20).map(|j| -0.2 + 1.1 * j as f64 / 19.0).collect();
    (re, im)
}

#[derive(Debug, Clone)]
pub struct MembershipSummary {
    pub flagged: Vec<bool>,
    pub near: Vec<bool>,
    pub boundary: Vec<bool>,
    pub mismatches: usize,
    pub flagged_count: usize,
    pub near_count: usize,
}

/// Nodes in the complement of `T`: those judged `in_T = false`, plus those where a condition
/// of the membership test changes sign toward a grid neighbour while its inequality holds on
/// both sides (the curve passes between them). Compared with the nodes within one grid
/// spacing of the traced limit curves.
pub fn membership_consistency() -> Result<MembershipSummary> {
    let p = ix2();
    let (re, im) = membership_grid();
    let (nx, ny) = (re.len(), im.len());
    let spacing = (im[1] - im[0]).min(re[1] - re[0]);
    let y = curves::y_shape_with(&p, 0.01, re[nx - 1] + 1.0)?;
    let mut verdicts = Vec::with_capacity(nx * ny);
    for &b in &im {
        for &a in &re {
            verdicts.push(stokes::progressive_path(&p, C::new(a, b), 0.0, None)?);
        }
    }
    let idx = |i: usize, j: usize| j * nx + i;
    let mut flagged = vec![false; nx * ny];
    let mut near = vec![false; nx * ny];
    let mut boundary = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = idx(i, j);
            let v = &verdicts[k];
            boundary[k] = v.verdict == Verdict::Boundary;
            flagged[k] |= v.in_t() == Some(false);
            near[k] = y.distance(C::new(re[i], im[j])) <= spacing;
            let neighbours = [(i + 1, j), (i, j + 1)];
            for (ni, nj) in neighbours {
                if ni >= nx || nj >= ny {
                    continue;
                }
                let w = &verdicts[idx(ni, nj)];
                let crosses = v.sides[0].conditions.iter().any(|c| {
                    w.sides[0].conditions.iter().any(|d| {
                        d.name == c.name
                            && c.sign_ok
                            && d.sign_ok
                            && c.equality.signum() != d.equality.signum()
                    })
                });
                if crosses {
                    flagged[k] = true;
                    flagged[idx(ni, nj)] = true;
                }
            }
        }
    }
    let mismatches = (0..nx * ny).filter(|&k| !boundary[k] && flagged[k] != near[k]).count();
    Ok(MembershipSummary {
        flagged_count: flagged.iter().filter(|f| **f).count(),
        near_count: near.iter().filter(|f| **f).count(),
        flagged,
        near,
        boundary,
        mismatches,
    })
}

pub fn criterion_8() -> CriterionReport {
    report(8, CRITERIA[7].1, || {
        let s = membership_consistency()?;
        Ok(vec![
            row_bool(
                format!("nonempty complement ({} flagged, {} near the curves)", s.flagged_count, s.near_count),
                s.flagged_count > 0,
            ),
            row_le("nodes where membership and curve distance disagree", s.mismatches as f64, 0.0),
        ])
    })
}

/// The real segment `[-1, 1]` on the sheet along which `Re z` increases.
pub fn progressive_real_path(p: &Potential, e: C) -> Result<BranchedPath> {
    let path = BranchedPath::principal(p, e, vec![C::new(-1.0, 0.0), C::new(1.0, 0.0)], Anchor::Start, 0.0)?;
    Ok(if contour::action(p, e, &path)?.re < 0.0 { path.negated() } else { path })
}

pub fn criterion_9() -> CriterionReport {
    report(9, CRITERIA[8].1, || {
        let p = ix2();
        let e = C::new(10.0, 1.0);
        let path = progressive_real_path(&p, e)?;
        let r1 = wkb_series(&p, e, 0.1, &path, 8)?;
        let r2 = wkb_series(&p, e, 0.05, &path, 8)?;
        Ok(vec![
            row_in("|W+ - 1| ratio, h = 0.05 / 0.1", (r2.w_plus - 1.0).norm() / (r1.w_plus - 1.0).norm(), 0.4, 0.6),
            row_in("|W- - 1| ratio, h = 0.05 / 0.1", (r2.w_minus - 1.0).norm() / (r1.w_minus - 1.0).norm(), 0.4, 0.6),
        ])
    })
}

pub fn criterion_10() -> CriterionReport {
    report(10, CRITERIA[9].1, || {
        let p = ix2();
        let n = 192;
        let inner = C::new(5.0, 1.0 / 6.0);
        let ratio = pseudospec::smin(&p, 0.05, inner, n)? / pseudospec::smin(&p, 0.1, inner, n)?;
        let outer = C::new(5.0, 2.0);
        let vals = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| pseudospec::smin(&p, h, outer, n))
            .collect::<Result<Vec<f64>>>()?;
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            / vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let rect = Rect::new(-2.0, 10.0, -0.5, 2.5)?;
        let g = pseudospec::grid(&p, 0.1, rect, 49, 25, 160)?;
        let sub = g.sublevel(1e-2);
        let escape = sub
            .iter()
            .map(|&z| pseudospec::distance_to_symbol_set(&p, z))
            .fold(0.0, f64::max);
        // eigenvalues have smin = 0 and so belong to every sublevel set, lattice or not
        let a = solver::discretize(&p, 0.1, 160)?;
        let eig_escape = solver::dense_eigenvalues(&a)?
            .into_iter()
            .filter(|z| rect.contains(*z))
            .map(|z| pseudospec::distance_to_symbol_set(&p, z))
            .fold(0.0, f64::max);
        Ok(vec![
            row_le("smin(h = 0.05) / smin(h = 0.1) at 5 + i/6", ratio, 0.2),
            Row {
                quantity: "max/min smin over h in {0.1, 0.05, 0.025} at 5 + 2i".into(),
                measured: spread,
                expected: "< 2".into(),
                pass: spread < 2.0,
            },
            row_le(
                format!("dist of 1e-2 sublevel grid nodes ({}) to symbol set", sub.len()),
                escape,
                0.2,
            ),
            row_le("dist of eigenvalues in the rectangle to symbol set", eig_escape, 0.2),
        ])
    })
}

pub fn two_jump_extrapolation(p: &Potential, beta: f64) -> Result<(Vec<f64>, f64)> {
    let ds = [0.2, 0.1, 0.05];
    let ys = ds
        .iter()
        .map(|d| pseudospec::two_jump_asymptote(p, beta, beta + d, 0.0))
        .collect::<Result<Vec<f64>>>()?;
    let limit = pseudospec::linear_extrapolation(&ds, &ys);
    Ok((ys, limit))
}

pub fn criterion_11() -> CriterionReport {
    report(11, CRITERIA[10].1, || {
        let p = ix2();
        let beta = 0.3;
        let (_, limit) = two_jump_extrapolation(&p, beta)?;
        let target = p.eval_real(beta).im;
        Ok(vec![row_le(
            "|linear extrapolation of asymptotes - Im V(0.3)|",
            (limit - target).abs(),
            1e-3,
        )])
    })
}
