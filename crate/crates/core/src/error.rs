use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("matrix is not Hermitian (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("indices must differ, got {0} twice")]
    RepeatedIndex(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:.3e})")]
    EigenNotConverged { sweeps: usize, off_diagonal: f64 },

    #[error("sigma_{k} must be positive, got {value:e}")]
    NonPositiveSigma { k: usize, value: f64 },

    #[error("largest eigenvalue at point {index} is not positive: {value:e}")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("point {index} is not admissible: sigma_{failed} <= 0")]
    Inadmissible { index: usize, failed: usize },

    #[error("line search stalled at iteration {iteration} (residual {residual:.3e})")]
    LineSearchStall { iteration: usize, residual: f64 },

    #[error("linear solver did not converge: relative residual {relative:.3e} after {iterations} iterations")]
    LinearSolve { iterations: usize, relative: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NewtonNotConverged { iterations: usize, residual: f64 },

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
