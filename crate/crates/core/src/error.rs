use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidSpec(String),

    #[error("invalid barrier layout: {0}")]
    InvalidLayout(String),

    /// The analytic path needs wells of identical size; other layouts go through
    /// the dense eigensolver.
    #[error("layout is not an equal-well partition ({0}); use the dense spectral path")]
    NotEqualWells(String),

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("root finder returned {found} roots, expected {expected}")]
    RootCountMismatch { found: usize, expected: usize },

    #[error("energy gap {0:e} is below the degeneracy tolerance")]
    DegenerateGap(f64),

    #[error("initial state norm {0} is neither 1 nor 1/2")]
    NotNormalized(f64),

    #[error("no transfer: max F_r = {0:.4} over the window")]
    NoTransfer(f64),

    #[error("decay rate must be non-negative, got {0}")]
    NegativeRate(f64),

    #[error("integrator step-size failure at t = {time}: trace drift {drift:e}")]
    StepSizeFailure { time: f64, drift: f64 },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
}
