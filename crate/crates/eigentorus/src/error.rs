//! Error taxonomy shared by the whole crate.
//!
//! Three failure families matter operationally and map onto distinct CLI
//! exit codes: configuration errors (a parameter chain like ε ≤ α ≤ δ ≤ L/4
//! was violated before any numerics ran), solver non-convergence (the
//! numerics ran and did not reach the requested residual), and internal
//! consistency violations (a quantity that is exactly zero in the continuum
//! — e.g. the real part of a Clifford cross term — came out large, which
//! signals a convention bug rather than a numerical limitation).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, detected before any numerical work.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative solve ran out of budget before meeting its tolerance.
    #[error(
        "solver did not converge: {context} (residual {residual:.3e} after {iterations} \
         iterations, tolerance {tolerance:.3e})"
    )]
    NonConvergence {
        context: String,
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    /// Every computed eigenvalue fell inside the kernel band: the grid is too
    /// coarse to separate the first positive eigenvalue from the kernel.
    #[error("resolution too coarse: {0}; increase nodes_per_axis")]
    ResolutionTooCoarse(String),

    /// A quantity that vanishes identically in exact arithmetic exceeded its
    /// rounding allowance; points at an internal convention inconsistency.
    #[error("internal consistency violation: {0}")]
    Inconsistency(String),

    /// Trial data violated a variational admissibility requirement
    /// (e.g. the Dirac quotient needs ∫⟨Dφ, φ⟩ > 0).
    #[error("admissibility violation: {0}")]
    Admissibility(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
