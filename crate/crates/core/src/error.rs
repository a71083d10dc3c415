use std::path::PathBuf;

use crate::linalg::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid system: {}", .0.join("; "))]
    InvalidSystem(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Jordan structure is not numerically decidable: {0}")]
    RankAmbiguity(String),

    #[error(
        "contour too close to a root: min|det Δ|/max|det Δ| = {ratio:.3e} on circle |λ - {center}| = {radius}"
    )]
    ContourTooClose { center: C64, radius: f64, ratio: f64 },

    #[error("root refinement did not converge: {0}")]
    NonConvergence(String),

    #[error("state violates y = z(0) - A₋₁z(-1) by {violation:.3e} (tolerance {tolerance:.3e})")]
    DomainViolation { violation: f64, tolerance: f64 },

    #[error("0 lies in the spectrum: ∫A₃ is numerically singular, so 𝒜 is not invertible")]
    ZeroInSpectrum,

    #[error("λ = {lambda} is not an eigenvalue (relative |det Δ(λ)| = {relative_det:.3e})")]
    NotAnEigenvalue { lambda: C64, relative_det: f64 },

    #[error("kernel of Δ({lambda}) has dimension {dim}; only simple eigenvectors are constructed")]
    MultipleKernel { lambda: C64, dim: usize },

    #[error("implicit matrix I - (h/2)A₂(0) is singular at m = {m}; refine the grid")]
    SingularImplicit { m: usize },

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient samples: need {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("|λ| = {abs_lambda} is below the large-|λ| regime 2M = {two_m}")]
    Regime { abs_lambda: f64, two_m: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
