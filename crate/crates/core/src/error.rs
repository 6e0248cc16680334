use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: {required} states requested, limit is {limit}")]
    Capacity { required: usize, limit: usize },

    #[error("snake length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("snake is not a walk on the integer line: {0}")]
    NotOnLine(String),

    #[error("matrix is not Hermitian: max deviation {max_dev:.3e}")]
    NonHermitian { max_dev: f64 },

    #[error("iterative method failed to converge after {iterations} iterations (tail {tail:.3e})")]
    Convergence { iterations: usize, tail: f64 },

    #[error("window too small: boundary amplitude mass {mass:.3e} exceeds {bound:.3e}")]
    WindowTruncation { mass: f64, bound: f64 },

    #[error("momentum grid too coarse: need at least {required} nodes, have {actual}")]
    GridResolution { required: usize, actual: usize },

    #[error("secular equation root count mismatch: expected {expected}, found {found}")]
    RootCount { expected: usize, found: usize },

    #[error("derivative cross-check failed at order {order}: implicit vs finite-difference differ by {diff:.3e}")]
    DerivativeInstability { order: usize, diff: f64 },

    #[error("stationary point not found in (pi/2, 3pi/2) for omega={omega}")]
    NoStationaryPoint { omega: f64 },

    #[error("scattering solve ill-conditioned: condition estimate {cond:.3e}")]
    IllConditioned { cond: f64 },

    #[error("oracle validation failed: {0}")]
    Validation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
