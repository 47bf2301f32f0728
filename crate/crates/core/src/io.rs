//! Serialization helpers and file formats.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::curves::SpectralCurve;
use crate::error::{Error, Result};
use crate::potential::{Jump, Potential};
use crate::pseudospec::PseudoGrid;
use crate::solver::EigenvalueRecord;
use crate::stokes::Rect;

/// Complex numbers as `[re, im]` pairs.
pub fn serialize_complex<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(2))?;
    seq.serialize_element(&z.re)?;
    seq.serialize_element(&z.im)?;
    seq.end()
}

pub fn serialize_complex_vec<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// JSON form of a potential: `{"coeffs": [[re, im], ...], "jumps": [{"beta": .., "shift_im": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDescriptor {
    pub coeffs: Vec<[f64; 2]>,
    #[serde(default)]
    pub jumps: Vec<Jump>,
}

impl PotentialDescriptor {
    pub fn build(&self) -> Result<Potential> {
        Potential::new(
            self.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
            self.jumps.clone(),
        )
    }

    pub fn from_potential(p: &Potential) -> Self {
        Self {
            coeffs: p.coeffs().iter().map(|c| [c.re, c.im]).collect(),
            jumps: p.jumps().to_vec(),
        }
    }
}

impl Default for PotentialDescriptor {
    fn default() -> Self {
        Self::from_potential(&Potential::ix2())
    }
}

pub fn parse_potential(json: &str) -> Result<Potential> {
    serde_json::from_str::<PotentialDescriptor>(json)?.build()
}

/// Fixed float formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn eigen_csv(records: &[EigenvalueRecord]) -> String {
    let mut s = String::from("re,im,h,method,k,residual\n");
    for r in records {
        let k = r.k.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(r.e.re),
            fmt_f64(r.e.im),
            fmt_f64(r.h),
            r.method,
            k,
            fmt_f64(r.residual)
        );
    }
    s
}

pub fn curve_csv(curve: &SpectralCurve) -> String {
    let mut s = String::from("a,b\n");
    for z in &curve.points {
        let _ = writeln!(s, "{},{}", fmt_f64(z.re), fmt_f64(z.im));
    }
    s
}

pub fn grid_csv(g: &PseudoGrid) -> String {
    let mut s = String::from("re,im,smin\n");
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let z = g.node(ix, iy);
            let _ = writeln!(s, "{},{},{}", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(g.value(ix, iy)));
        }
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// `NXxNY`, e.g. `40x20`.
pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("grid `{s}` is not of the form NXxNY"));
    let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let nx: usize = a.trim().parse().map_err(|_| bad())?;
    let ny: usize = b.trim().parse().map_err(|_| bad())?;
    if nx == 0 || ny == 0 {
        return Err(bad());
    }
    Ok((nx, ny))
}

/// `re_min,re_max,im_min,im_max`.
pub fn parse_rect(s: &str) -> Result<Rect> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::InvalidArgument(format!("rect `{s}` needs four comma-separated numbers")));
    }
    let mut v = [0.0; 4];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("rect `{s}`: `{p}` is not a number")))?;
    }
    Rect::new(v[0], v[1], v[2], v[3])
}

/// Frozen oracle values used by the regression tests and the acceptance suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFixtures {
    /// Modulus of the junction point of the three curves for `V = i x^2`.
    pub lambda0: f64,
    /// `S_{-1,1}(10 + i/3)` for `V = i x^2`, graph-form determination.
    pub action_ix2: OracleAction,
    /// Dirichlet eigenvalues of `-h^2 d^2/dx^2 + i x^2`.
    pub eigenvalues: Vec<OracleEigenvalue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleAction {
    pub energy: [f64; 2],
    pub value: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleEigenvalue {
    pub h: f64,
    pub e: [f64; 2],
}

pub const FIXTURES_ENV: &str = "STOKESCOPE_FIXTURES";
pub const ORACLE_FILE: &str = "oracles.json";

/// `$STOKESCOPE_FIXTURES` if set, else the crate's `fixtures/` directory.
pub fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURES_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

pub fn parse_oracles(json: &str) -> Result<OracleFixtures> {
    let f: OracleFixtures = serde_json::from_str(json)?;
    let finite = f.lambda0.is_finite()
        && f.action_ix2.energy.iter().chain(&f.action_ix2.value).all(|v| v.is_finite())
        && f.eigenvalues.iter().all(|e| e.h > 0.0 && e.e.iter().all(|v| v.is_finite()));
    if !finite {
        return Err(Error::Config {
            path: ORACLE_FILE.into(),
            message: "non-finite or non-positive entries".into(),
        });
    }
    Ok(f)
}

pub fn load_oracles(dir: &Path) -> Result<OracleFixtures> {
    let path = dir.join(ORACLE_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_oracles(&text)
}

/// Minimal SVG canvas mapping a rectangle of the complex plane onto the page.
pub struct Svg {
    rect: Rect,
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(rect: Rect, width: f64) -> Self {
        let height = width * rect.height() / rect.width();
        Self {
            rect,
            width,
            height,
            body: String::new(),
        }
    }

    fn map(&self, z: Complex64) -> (f64, f64) {
        (
            (z.re - self.rect.re_min) / self.rect.width() * self.width,
            (self.rect.im_max - z.im) / self.rect.height() * self.height,
        )
    }

    pub fn polyline(&mut self, points: &[Complex64], color: &str) {
        if points.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (k, &z) in points.iter().enumerate() {
            let (x, y) = self.map(z);
            let _ = write!(d, "{}{x:.3},{y:.3} ", if k == 0 { "M" } else { "L" });
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            d.trim_end()
        );
    }

    pub fn dots(&mut self, points: &[Complex64], color: &str, radius: f64) {
        for &z in points {
            let (x, y) = self.map(z);
            let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius}" fill="{color}"/>"#);
        }
    }

    pub fn text(&mut self, z: Complex64, label: &str) {
        let (x, y) = self.map(z);
        let escaped = label.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(self.body, r#"<text x="{x:.3}" y="{y:.3}" font-size="12">{escaped}</text>"#);
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.3} {h:.3}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}
