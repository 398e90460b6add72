use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, grids or sizes that do not fit together.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Input that violates a documented invariant of the receiving type.
    #[error("validation error: {0}")]
    Validation(String),

    /// NaN or infinite values produced during an iteration.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("eigensolver did not converge (best residual {best_residual:.3e} after {iterations} iterations)")]
    NonConvergence { best_residual: f64, iterations: usize },

    /// A construction whose dimension would exceed the configured cap.
    #[error("capacity exceeded: {parameter} requires dimension {required}, cap is {cap}")]
    Capacity {
        parameter: String,
        required: usize,
        cap: usize,
    },

    #[error("unsupported moment order k + l = {0} (at most 2 without opt-in)")]
    UnsupportedRange(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
