use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by grid construction, the per-mode solvers and the
/// nonlinear iteration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("unsupported derivative order {0}")]
    UnsupportedOrder(usize),

    #[error("singular per-mode system at mode {mode} (lambda = {lambda}); increase vertical resolution")]
    Singular { mode: usize, lambda: Complex64 },

    #[error("support condition violated: boundary value {boundary:.3e} exceeds {limit:.3e}")]
    SupportViolation { boundary: f64, limit: f64 },

    #[error("forcing is not solenoidal: weak divergence residual {0:.3e}")]
    NotSolenoidal(f64),

    #[error("deformation degenerated: det A = {det:.3e} at t = {time}")]
    Degenerate { det: f64, time: f64 },

    #[error("fixed-point iteration diverged at iterate {iterate}: X-norm {norm:.3e}")]
    Diverged { iterate: usize, norm: f64 },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("series value {value:.3e} at index {index} is not positive")]
    NonPositive { index: usize, value: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
