//! Semiclassical spectra, Stokes geometry and pseudospectra of `-h^2 d^2/dx^2 + V` on `[-1, 1]`
//! with Dirichlet conditions, for polynomial complex potentials with imaginary jumps.

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod contour;
pub mod curves;
pub mod error;
pub mod io;
pub mod poly;
pub mod potential;
pub mod pseudospec;
pub mod quad;
pub mod solver;
pub mod stokes;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use potential::{Jump, Potential};
