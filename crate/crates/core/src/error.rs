//! Error type shared by operators and solvers.

/// Errors reported by model construction, operator application, and solvers.
#[derive(Debug, thiserror::Error)]
pub enum ReconError {
    /// Array shapes or grid sizes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Invalid parameter or inconsistent configuration of an operator/solver.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Operation not defined for the given inputs (e.g. an undersampled
    /// pattern where full sampling is required).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Iteration produced non-finite values or diverged.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A guaranteed numerical invariant (monotonicity, feasibility) was
    /// violated at runtime.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// Crate-wide result alias.
pub type Result<V> = std::result::Result<V, ReconError>;
