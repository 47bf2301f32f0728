use num_complex::Complex64;

/// Errors produced by the numerical routines and the I/O layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("no turning points definable for a constant potential")]
    NoTurningPoints,

    #[error("branch point collision: path passes within {distance:.3e} of turning point {point}")]
    BranchPointCollision { point: Complex64, distance: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e} (tolerance {tolerance:.1e})")]
    QuadratureNonConvergence { achieved: f64, tolerance: f64 },

    #[error("at turning point: |V(x) - E| = {0:.3e}")]
    AtTurningPoint(f64),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("point {0} lies on a traced Stokes line")]
    OnBoundary(Complex64),

    #[error("no curve point / bracket exhausted: {0}")]
    BracketExhausted(String),

    #[error("below asymptotic regime: {0}")]
    BelowAsymptoticRegime(String),

    #[error("continuation failed: {0}")]
    ContinuationFailed(String),

    #[error("junction search failed: {0}")]
    JunctionNotFound(String),

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("integration step underflow at x = {x}")]
    StepUnderflow { x: f64 },

    #[error("refinement failed: {0}")]
    RefineFailed(String),

    #[error("newton iteration diverged: {0}")]
    NewtonDivergence(String),

    #[error("path is not progressive: {0}")]
    NotProgressive(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
