use thiserror::Error;

/// Errors shared across the construction, curvature and flow modules.
#[derive(Debug, Error)]
pub enum HookError {
    /// A parameter violates its documented range; the message names the field.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// An evaluation outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested grid cannot resolve a feature of the construction.
    #[error("resolution too coarse: {0}")]
    Resolution(String),

    /// The requested geometry cannot be realized with a C^2 construction.
    #[error("geometric infeasibility: {0}")]
    Infeasible(String),

    /// A runtime monitor or internal invariant was breached; signals a solver
    /// bug, not a model event.
    #[error("invariant breached: {0}")]
    Invariant(String),

    /// An analysis was asked for data the trajectory does not contain.
    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Configuration file problems (syntax, missing or unknown keys).
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, HookError>;
