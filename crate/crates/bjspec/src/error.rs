use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("diagonal block V_{n} is not hermitian (residual {residual:.3e})")]
    NonHermitianDiagonal { n: usize, residual: f64 },
    #[error("off-diagonal block T_{n} is numerically singular (smallest singular value {sigma:.3e})")]
    SingularOffDiagonal { n: usize, sigma: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("site index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("Moebius transformation numerically singular (condition number {cond:.3e})")]
    MoebiusSingular { cond: f64 },
    #[error("frame numerically rank deficient (smallest singular value {sigma:.3e})")]
    FrameDegenerate { sigma: f64 },
    #[error("rank decision ambiguous: singular value {sigma:.3e} within a factor 10 of threshold {threshold:.3e}")]
    RankIndeterminate { sigma: f64, threshold: f64 },
    #[error("eigensolve failed: {0}")]
    EigensolveFailure(String),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("no convergence within N_max = {n_max}: {detail}")]
    NoConvergence { n_max: usize, detail: String },
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },
    #[error("too many singular integrand evaluations: {skipped} of {samples}")]
    TooManySingular { skipped: usize, samples: usize },
    #[error("path refinement limit reached ({points} points)")]
    RefinementLimit { points: usize },
    #[error("endpoint E = {energy} lies on the spectrum (phase within {dist:.3e} of a crossing)")]
    EndpointOnSpectrum { energy: f64, dist: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
