use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("root solve did not converge at site {site} (r = {radius}): residual {residual:e}")]
    RootNotConverged { site: usize, radius: f64, residual: f64 },

    #[error("decay matrix has eigenvalue {eigenvalue:e} below tolerance -{tolerance:e}")]
    NotPositiveSemidefinite { eigenvalue: f64, tolerance: f64 },

    #[error("diffraction-edge singularity: |k_perp - q| - k = {distance:e}")]
    DiffractionEdge { distance: f64 },

    #[error("unsupported regularization: {0}")]
    UnsupportedRegularization(String),

    #[error("lattice sum not converged: error estimate {estimate:e} (partials {partials:?})")]
    LatticeSumNotConverged { estimate: f64, partials: Vec<f64> },

    #[error("tan pole at kL = {kl}: resonance detuning is unbounded")]
    TanPole { kl: f64 },

    #[error("delay undefined: |T| = {magnitude:e}")]
    UndefinedDelay { magnitude: f64 },

    #[error("near-dark state: eigenvalue {eigenvalue} gives condition estimate {condition:e}")]
    NearDarkState { eigenvalue: Complex64, condition: f64 },

    #[error("integrator step underflow at t = {time} (step {step:e})")]
    Stiffness { time: f64, step: f64 },

    #[error("trajectory norm underflow at t = {time}")]
    NormUnderflow { time: f64 },

    #[error("mode fit failed: relative residual {relative_residual:e}")]
    FitFailure { relative_residual: f64 },

    #[error("g2 undefined: vanishing detected intensity {intensity:e}")]
    UndefinedCorrelation { intensity: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::Precondition(_)
            | Error::Domain(_)
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedRegularization(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Config,
            _ => ErrorKind::Numerical,
        }
    }
}
