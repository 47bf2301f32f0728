//! Run configuration: one JSON file, overridable from the command line.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::PotentialDescriptor;
use crate::potential::{Jump, Potential};
use crate::stokes::Rect;

fn default_h() -> Vec<f64> {
    vec![0.05]
}
fn default_a_min() -> f64 {
    5.0
}
fn default_a_max() -> f64 {
    50.0
}
fn default_a_step() -> f64 {
    0.5
}
fn default_rect() -> [f64; 4] {
    [-2.0, 10.0, -0.5, 2.5]
}
fn default_grid() -> [usize; 2] {
    [49, 25]
}
fn default_n() -> usize {
    256
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_energy() -> [f64; 2] {
    [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub potential: PotentialDescriptor,
    #[serde(default = "default_h")]
    pub h: Vec<f64>,
    /// Symmetric perturbation `-i delta` left of `beta`, `+i delta` right of it.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    /// Extra jumps appended to those of the potential descriptor.
    #[serde(default)]
    pub jumps: Vec<Jump>,
    #[serde(default = "default_a_min")]
    pub a_min: f64,
    #[serde(default = "default_a_max")]
    pub a_max: f64,
    #[serde(default = "default_a_step")]
    pub a_step: f64,
    /// `[re_min, re_max, im_min, im_max]`.
    #[serde(default = "default_rect")]
    pub rect: [f64; 4],
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub svg: bool,
    /// Energy for the Stokes diagram.
    #[serde(default = "default_energy")]
    pub energy: [f64; 2],
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        ))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    /// Checks every field, reporting the first violation with its path in the JSON document.
    pub fn validate(&self) -> Result<()> {
        if self.h.is_empty() {
            return Err(invalid("h", "at least one value of h is required"));
        }
        for (k, &h) in self.h.iter().enumerate() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid(format!("h[{k}]"), format!("h must be positive, got {h}")));
            }
        }
        if !self.delta.is_finite() {
            return Err(invalid("delta", "must be finite"));
        }
        if self.delta != 0.0 && self.beta.is_none() {
            return Err(invalid("beta", "a nonzero delta needs a jump location"));
        }
        if let Some(b) = self.beta {
            if !(b > -1.0 && b < 1.0) {
                return Err(invalid("beta", format!("{b} is not strictly inside (-1, 1)")));
            }
        }
        if !(self.a_min.is_finite() && self.a_max.is_finite()) || self.a_min >= self.a_max {
            return Err(invalid(
                "a_min",
                format!("empty a-range [{}, {}]", self.a_min, self.a_max),
            ));
        }
        if !(self.a_step > 0.0 && self.a_step.is_finite()) {
            return Err(invalid("a_step", "must be positive"));
        }
        let [a, b, c, d] = self.rect;
        Rect::new(a, b, c, d).map_err(|e| invalid("rect", e.to_string()))?;
        for (k, &g) in self.grid.iter().enumerate() {
            if g < 2 {
                return Err(invalid(format!("grid[{k}]"), "resolution must be at least 2"));
            }
        }
        if self.n < 16 {
            return Err(invalid("n", "N must be at least 16"));
        }
        if !self.energy.iter().all(|v| v.is_finite()) {
            return Err(invalid("energy", "must be finite"));
        }
        self.build_potential().map(|_| ())
    }

    /// The descriptor's potential with the configured jumps and symmetric perturbation.
    pub fn build_potential(&self) -> Result<Potential> {
        let mut desc = self.potential.clone();
        desc.jumps.extend(self.jumps.iter().copied());
        desc.jumps.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        let base = desc.build().map_err(|e| invalid("potential", e.to_string()))?;
        match self.beta {
            Some(beta) if self.delta != 0.0 => base
                .with_symmetric_jump(beta, self.delta)
                .map_err(|e| invalid("beta", e.to_string())),
            _ => Ok(base),
        }
    }

    pub fn rect(&self) -> Rect {
        let [a, b, c, d] = self.rect;
        Rect::new(a, b, c, d).expect("validated")
    }

    pub fn energy(&self) -> Complex64 {
        Complex64::new(self.energy[0], self.energy[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.build_potential().unwrap(), Potential::ix2());
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::from_json(r#"{"h": [0.1, -0.2]}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "h[1]"), "{err}");
        let err = RunConfig::from_json(r#"{"a_min": 10, "a_max": 10}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "a_min"));
        let err = RunConfig::from_json(r#"{"grid": [1, 5]}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "grid[0]"));
        let err = RunConfig::from_json(r#"{"delta": 0.1}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "beta"));
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn perturbation_is_applied() {
        let cfg = RunConfig::from_json(r#"{"delta": 0.1, "beta": 0.3}"#).unwrap();
        let p = cfg.build_potential().unwrap();
        assert_eq!(p.jumps().len(), 1);
        assert!((p.eval_real(0.9) - Complex64::new(0.0, 0.81 + 0.1)).norm() < 1e-15);
        assert!((p.eval_real(0.0) - Complex64::new(0.0, -0.1)).norm() < 1e-15);
    }
}
