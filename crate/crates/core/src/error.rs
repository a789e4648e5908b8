use thiserror::Error;

use crate::optimize::AscentTrace;

/// Errors produced by mesh construction, state solves and the optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("admissible class violation: {0}")]
    ClassViolation(String),

    #[error("linear solver error: {0}")]
    Solver(String),

    #[error("not converged: {0}")]
    NonConvergence(String),

    /// A state solve inside an ascent loop failed; the trace recorded so far is kept.
    #[error("ascent stopped after {} steps: {reason}", trace.steps.len())]
    AscentStopped { reason: String, trace: Box<AscentTrace> },

    #[error("perturbation too large: {0}")]
    PerturbationTooLarge(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
