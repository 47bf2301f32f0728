//! Command-line front end: argument parsing, configuration overrides and the subcommands.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::acceptance;
use crate::config::RunConfig;
use crate::curves::{self, SpectralCurve};
use crate::error::{Error, Result};
use crate::io::{self, Svg};
use crate::potential::Potential;
use crate::pseudospec;
use crate::solver::{self, EigenvalueRecord};
use crate::stokes::{self, Rect, StokesDiagram};

pub type C = Complex64;

#[derive(Debug, Parser)]
#[command(name = "stokescope", version, about = "Semiclassical spectra, Stokes lines and pseudospectra on [-1, 1]")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limit-spectrum curves, one per smooth piece, with their asymptotes.
    LimitCurve,
    /// Dirichlet eigenvalues from the filtered matrix, refined by shooting.
    Eigs,
    /// Stokes-line diagram at the configured energy.
    Stokes,
    /// Smallest-singular-value grid of the discretized resolvent.
    Pseudospec,
    /// The three-branch limit set of V = i x^2.
    YShape,
    /// Runs the acceptance checks and prints a pass/fail table.
    Verify,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Semiclassical parameter (repeatable).
    #[arg(long = "h", global = true, value_name = "F")]
    pub h: Vec<f64>,
    #[arg(long, global = true, value_name = "F", allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, value_name = "F", allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, value_name = "F", allow_hyphen_values = true)]
    pub amin: Option<f64>,
    #[arg(long, global = true, value_name = "F", allow_hyphen_values = true)]
    pub amax: Option<f64>,
    #[arg(long, global = true, value_name = "F")]
    pub astep: Option<f64>,
    /// Grid resolution `NXxNY`.
    #[arg(long, global = true, value_name = "NXxNY")]
    pub grid: Option<String>,
    /// Rectangle `re_min,re_max,im_min,im_max`.
    #[arg(long, global = true, value_name = "a,b,c,d", allow_hyphen_values = true)]
    pub rect: Option<String>,
    /// Collocation intervals.
    #[arg(long = "N", global = true, value_name = "INT")]
    pub n: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub svg: bool,
    /// Restrict `verify` to a group (curves, eigs, solver, stokes, wkb, pseudospec), a number, or a name.
    #[arg(long, global = true, value_name = "NAME")]
    pub filter: Option<String>,
    /// Energy `re,im` for the Stokes diagram.
    #[arg(long, global = true, value_name = "re,im", allow_hyphen_values = true)]
    pub energy: Option<String>,
}

fn parse_energy(s: &str) -> Result<[f64; 2]> {
    let bad = || Error::InvalidArgument(format!("energy `{s}` is not of the form re,im"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

/// The configuration file (or defaults) with command-line flags applied on top, validated.
pub fn resolve_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if !o.h.is_empty() {
        cfg.h = o.h.clone();
    }
    if let Some(d) = o.delta {
        cfg.delta = d;
    }
    if let Some(b) = o.beta {
        cfg.beta = Some(b);
    }
    if let Some(v) = o.amin {
        cfg.a_min = v;
    }
    if let Some(v) = o.amax {
        cfg.a_max = v;
    }
    if let Some(v) = o.astep {
        cfg.a_step = v;
    }
    if let Some(g) = &o.grid {
        let (nx, ny) = io::parse_grid(g)?;
        cfg.grid = [nx, ny];
    }
    if let Some(r) = &o.rect {
        let r = io::parse_rect(r)?;
        cfg.rect = [r.re_min, r.re_max, r.im_min, r.im_max];
    }
    if let Some(n) = o.n {
        cfg.n = n;
    }
    if let Some(out) = &o.out {
        cfg.out = out.clone();
    }
    if o.svg {
        cfg.svg = true;
    }
    if let Some(e) = &o.energy {
        cfg.energy = parse_energy(e)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    if let Command::Verify = cli.command {
        return Ok(cmd_verify(cli.opts.filter.as_deref()));
    }
    let cfg = resolve_config(&cli.opts)?;
    let files = match cli.command {
        Command::LimitCurve => cmd_limit_curve(&cfg)?,
        Command::Eigs => cmd_eigs(&cfg)?,
        Command::Stokes => cmd_stokes(&cfg)?,
        Command::Pseudospec => cmd_pseudospec(&cfg)?,
        Command::YShape => cmd_y_shape(&cfg)?,
        Command::Verify => unreachable!(),
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(0)
}

fn fmt_tag(x: f64) -> String {
    format!("{x}").replace('-', "m")
}

/// Curves `Gamma_{x0,x1}` over each smooth piece of the configured potential.
pub fn limit_curves(cfg: &RunConfig) -> Result<Vec<SpectralCurve>> {
    let p = cfg.build_potential()?;
    p.pieces()
        .iter()
        .map(|pc| curves::trace_curve(&p, pc.left, pc.right, pc.shift, cfg.a_min, cfg.a_max, cfg.a_step))
        .collect()
}

fn curve_rect(curves: &[&SpectralCurve], extra: &[C]) -> Rect {
    let pts = curves.iter().flat_map(|c| c.points.iter()).chain(extra.iter());
    let (mut r0, mut r1, mut i0, mut i1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in pts {
        r0 = r0.min(z.re);
        r1 = r1.max(z.re);
        i0 = i0.min(z.im);
        i1 = i1.max(z.im);
    }
    let pad_r = 0.05 * (r1 - r0).max(1e-3);
    let pad_i = 0.25 * (i1 - i0).max(0.2);
    Rect::new(r0 - pad_r, r1 + pad_r, i0 - pad_i, i1 + pad_i).unwrap_or_else(|_| Rect::default_box())
}

pub fn cmd_limit_curve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = cfg.build_potential()?;
    let curves = limit_curves(cfg)?;
    let mut files = Vec::new();
    let mut meta = Vec::new();
    for c in &curves {
        let (x0, x1) = (endpoint_value(c.x0), endpoint_value(c.x1));
        let name = format!("curve_{}_{}.csv", fmt_tag(x0), fmt_tag(x1));
        files.push(io::write_file(&cfg.out, &name, &io::curve_csv(c))?);
        let (b_inf, c1, c2) = curves::expansion_coefficients(&p, x0, x1, c.shift);
        meta.push(json!({
            "x0": x0,
            "x1": x1,
            "shift": c.shift,
            "asymptote": c.asymptote,
            "expansion": {"b_inf": b_inf, "c1": c1, "c2": c2},
            "file": name,
            "points": c.points.len(),
        }));
    }
    let text = serde_json::to_string_pretty(&json!({ "curves": meta }))? + "\n";
    files.push(io::write_file(&cfg.out, "curves.json", &text)?);
    if cfg.svg {
        let refs: Vec<&SpectralCurve> = curves.iter().collect();
        let mut svg = Svg::new(curve_rect(&refs, &[]), 800.0);
        for (c, color) in curves.iter().zip(COLORS.iter().cycle()) {
            svg.polyline(&c.points, color);
            if let Some(b) = c.asymptote {
                svg.text(C::new(c.first().re, b), &format!("b -> {b:.6}"));
            }
        }
        files.push(io::write_file(&cfg.out, "curves.svg", &svg.finish())?);
    }
    Ok(files)
}

fn endpoint_value(e: curves::Endpoint) -> f64 {
    match e {
        curves::Endpoint::Real(x) => x,
        curves::Endpoint::AlphaMinus => f64::NEG_INFINITY,
        curves::Endpoint::AlphaPlus => f64::INFINITY,
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Filtered matrix eigenvalues in the configured rectangle, each followed by its shooting
/// refinement when that converges.
pub fn eigen_records(p: &Potential, h: f64, n: usize, rect: Rect) -> Result<Vec<EigenvalueRecord>> {
    let matrix = solver::eigenvalues(p, h, n, Some(rect))?;
    let mut out = Vec::with_capacity(2 * matrix.len());
    for r in matrix {
        out.push(r);
        match solver::refine(p, h, r.e) {
            Ok(s) => out.push(s),
            Err(e) => eprintln!("warning: refine from {:.10}: {e}", r.e),
        }
    }
    Ok(out)
}

pub fn cmd_eigs(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = cfg.build_potential()?;
    let rect = cfg.rect();
    let mut files = Vec::new();
    let mut all = Vec::new();
    for &h in &cfg.h {
        let recs = eigen_records(&p, h, cfg.n, rect)?;
        files.push(io::write_file(&cfg.out, &format!("eigs_h{}.csv", fmt_tag(h)), &io::eigen_csv(&recs))?);
        all.extend(recs);
    }
    if cfg.svg {
        let mut svg = Svg::new(rect, 800.0);
        // overlay the curves where the large-a analysis applies
        let a_lo = rect.re_min.max(curves::large_a_threshold(&p.polynomial_part(), 0.0) + 1.0);
        if a_lo < rect.re_max {
            for pc in p.pieces() {
                if let Ok(c) = curves::trace_curve(&p, pc.left, pc.right, pc.shift, a_lo, rect.re_max, 0.1) {
                    svg.polyline(&c.points, "#888888");
                }
            }
        }
        let pts: Vec<C> = all.iter().filter(|r| r.method == solver::Method::Matrix).map(|r| r.e).collect();
        svg.dots(&pts, "#d62728", 2.0);
        files.push(io::write_file(&cfg.out, "eigs.svg", &svg.finish())?);
    }
    Ok(files)
}

#[derive(Serialize)]
struct LineOut {
    source: usize,
    direction: f64,
    end: stokes::LineEnd,
    arc_length: f64,
    #[serde(serialize_with = "io::serialize_complex_vec")]
    points: Vec<C>,
}

#[derive(Serialize)]
struct DiagramOut {
    #[serde(serialize_with = "io::serialize_complex")]
    energy: C,
    shift: f64,
    #[serde(serialize_with = "io::serialize_complex_vec")]
    turning_points: Vec<C>,
    truncated: bool,
    bbox: Rect,
    lines: Vec<LineOut>,
}

fn diagram_out(d: &StokesDiagram) -> DiagramOut {
    DiagramOut {
        energy: d.energy,
        shift: d.shift,
        turning_points: d.turning_points.locations(),
        truncated: d.truncated(),
        bbox: d.bbox,
        lines: d
            .lines
            .iter()
            .map(|l| LineOut {
                source: l.source,
                direction: l.direction,
                end: l.end,
                arc_length: l.arc_length,
                points: l.points.clone(),
            })
            .collect(),
    }
}

/// One diagram per distinct piece shift, traced in the configured rectangle.
pub fn cmd_stokes(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = cfg.build_potential()?;
    let e = cfg.energy();
    let mut shifts: Vec<f64> = p.pieces().iter().map(|pc| pc.shift).collect();
    shifts.dedup();
    let mut files = Vec::new();
    let mut outs = Vec::new();
    for &s in &shifts {
        let d = stokes::trace_diagram(&p, e, s, cfg.rect())?;
        if d.truncated() {
            eprintln!(
                "warning: Stokes lines truncated by the box [{}, {}] x [{}, {}] (shift {s})",
                d.bbox.re_min, d.bbox.re_max, d.bbox.im_min, d.bbox.im_max
            );
        }
        if cfg.svg {
            let mut svg = Svg::new(d.bbox, 700.0);
            for l in &d.lines {
                svg.polyline(&l.points, "#1f77b4");
            }
            svg.dots(&d.turning_points.locations(), "#d62728", 3.0);
            svg.dots(&[C::new(-1.0, 0.0), C::new(1.0, 0.0)], "#000000", 3.0);
            files.push(io::write_file(&cfg.out, &format!("stokes_s{}.svg", fmt_tag(s)), &svg.finish())?);
        }
        outs.push(diagram_out(&d));
    }
    let text = serde_json::to_string(&json!({ "diagrams": outs }))? + "\n";
    files.insert(0, io::write_file(&cfg.out, "stokes.json", &text)?);
    Ok(files)
}

/// Points `V(x) + i s` over each piece: the left edge of the symbol set.
fn symbol_edge(p: &Potential) -> Vec<Vec<C>> {
    p.pieces()
        .iter()
        .map(|pc| {
            (0..=200)
                .map(|k| {
                    let x = pc.left + (pc.right - pc.left) * k as f64 / 200.0;
                    p.eval_poly(C::new(x, 0.0)) + C::new(0.0, pc.shift)
                })
                .collect()
        })
        .collect()
}

pub fn cmd_pseudospec(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = cfg.build_potential()?;
    let rect = cfg.rect();
    let [nx, ny] = cfg.grid;
    let mut files = Vec::new();
    for &h in &cfg.h {
        let g = pseudospec::grid(&p, h, rect, nx, ny, cfg.n)?;
        let tag = fmt_tag(h);
        files.push(io::write_file(&cfg.out, &format!("pseudospec_h{tag}.csv"), &io::grid_csv(&g))?);
        if cfg.svg {
            let mut svg = Svg::new(rect, 800.0);
            // sublevel bands 1e-1 .. 1e-8, darker for smaller smin
            for (k, shade) in ["#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5", "#08519c", "#08306b", "#041c40"]
                .iter()
                .enumerate()
            {
                let level = 10f64.powi(-(k as i32) - 1);
                let next = level / 10.0;
                let pts: Vec<C> = (0..ny)
                    .flat_map(|iy| (0..nx).map(move |ix| (ix, iy)))
                    .filter(|&(ix, iy)| {
                        let v = g.value(ix, iy);
                        v < level && (v >= next || k == 7)
                    })
                    .map(|(ix, iy)| g.node(ix, iy))
                    .collect();
                svg.dots(&pts, shade, 2.5);
            }
            for edge in symbol_edge(&p) {
                svg.polyline(&edge, "#000000");
            }
            let a_lo = rect.re_min.max(curves::large_a_threshold(&p.polynomial_part(), 0.0) + 1.0);
            if a_lo < rect.re_max {
                for pc in p.pieces() {
                    if let Ok(c) = curves::trace_curve(&p, pc.left, pc.right, pc.shift, a_lo, rect.re_max, 0.1) {
                        svg.polyline(&c.points, "#d62728");
                    }
                }
            }
            files.push(io::write_file(&cfg.out, &format!("pseudospec_h{tag}.svg"), &svg.finish())?);
        }
    }
    Ok(files)
}

pub fn cmd_y_shape(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = cfg.build_potential()?;
    let y = curves::y_shape_with(&p, 0.01, cfg.a_max)?;
    let mut files = Vec::new();
    let names = ["y_ray.csv", "y_alpha_plus_one.csv", "y_minus_one_one.csv"];
    for (c, name) in y.curves().iter().zip(names) {
        files.push(io::write_file(&cfg.out, name, &io::curve_csv(c))?);
    }
    let meta = json!({
        "lambda0": y.lambda0,
        "junction": [y.junction.re, y.junction.im],
        "files": names,
    });
    files.push(io::write_file(&cfg.out, "y_shape.json", &(serde_json::to_string_pretty(&meta)? + "\n"))?);
    if cfg.svg {
        let refs: Vec<&SpectralCurve> = y.curves().to_vec();
        let mut svg = Svg::new(curve_rect(&refs, &[C::new(0.0, 0.0)]), 800.0);
        for (c, color) in y.curves().iter().zip(COLORS) {
            svg.polyline(&c.points, color);
        }
        svg.dots(&[y.junction], "#000000", 3.0);
        files.push(io::write_file(&cfg.out, "y_shape.svg", &svg.finish())?);
    }
    Ok(files)
}

/// Prints the acceptance table; exit code 0 iff every selected criterion passes.
pub fn cmd_verify(filter: Option<&str>) -> i32 {
    let reports = acceptance::run(filter);
    let mut ok = !reports.is_empty();
    for r in &reports {
        print!("{r}");
        ok &= r.passed();
    }
    let passed = reports.iter().filter(|r| r.passed()).count();
    println!("{passed}/{} criteria passed", reports.len());
    if ok {
        0
    } else {
        1
    }
}

pub fn write_default_config(path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&RunConfig::default())? + "\n";
    std::fs::write(path, text)?;
    Ok(())
}
