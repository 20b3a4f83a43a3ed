use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum LpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    /// `certificate` is a row-space vector `y` with `y^T A <= 0` on every
    /// column and `y^T b > 0` (up to tolerance), proving `A x = b, x >= 0`
    /// has no solution.
    #[error("problem is infeasible (phase-one residual {residual:.3e})")]
    Infeasible { residual: f64, certificate: Vec<f64> },

    /// `ray` is a nonnegative direction with `A ray = 0` that improves the
    /// objective without bound.
    #[error("problem is unbounded along column {entering}")]
    Unbounded { entering: usize, ray: Vec<f64> },

    #[error("iteration limit {iterations} reached (objective {objective})")]
    IterationLimit {
        iterations: usize,
        objective: f64,
        basis: Vec<usize>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema mismatch: found {found:?}, expected {expected:?}")]
    Schema { found: String, expected: String },
}
