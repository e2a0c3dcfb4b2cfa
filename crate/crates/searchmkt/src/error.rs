//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by constructors, solvers, and the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A prior failed validation (support, normalization, or mean bounds).
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    /// A signal failed validation (cut ordering or degenerate cells).
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Search cost must satisfy 0 < k < E[theta]; outside that range the
    /// stopping problem has no interior reservation value.
    #[error("search cost k = {k} outside (0, {mean}) for this prior")]
    SearchCostOutOfRange { k: f64, mean: f64 },

    /// A payoff profile violates the feasibility constraints.
    #[error("infeasible payoff profile: {0}")]
    Infeasible(String),

    /// Root finding could not bracket a sign change.
    #[error("no sign change on bracket [{lo}, {hi}] (f(lo) = {flo}, f(hi) = {fhi})")]
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },

    /// An iterative routine hit its iteration cap before converging.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    /// A simulated episode exceeded the hard period cap.
    #[error("episode exceeded {cap} periods; stopping probability is degenerate")]
    EpisodeCapExceeded { cap: u64 },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
