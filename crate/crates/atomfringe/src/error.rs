//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A state failed its construction invariants (normalization, ordering,
    /// positivity, hermiticity).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A numeric argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A fit or reconstruction has no unique solution for the given design.
    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    /// A reconstruction produced unphysical intermediate quantities.
    #[error("infeasible reconstruction: {0}")]
    Infeasible(String),

    /// An iterative solver failed to converge; carries the best value seen.
    #[error("no convergence after {restarts} restarts (best value {best})")]
    Convergence { best: f64, restarts: usize },

    /// Not enough data to run an estimator.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// An internal consistency check failed; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
