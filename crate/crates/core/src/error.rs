use thiserror::Error;

/// Errors raised by the solvers, the optimizer and the verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Validation { what: &'static str, reason: String },

    #[error("ellipticity violated in cell {cell}: smallest eigenvalue {mu1:e}")]
    Ellipticity { cell: usize, mu1: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("load violates the compatibility condition: mean {mean:e} against norm {norm:e}")]
    Compatibility { mean: f64, norm: f64 },

    #[error("non-finite values at step {step} of the {phase} integration")]
    Divergence { step: usize, phase: &'static str },

    #[error("line search stagnated after {halvings} halvings (J = {cost:e}, |g| = {grad_norm:e})")]
    Stagnation {
        halvings: usize,
        cost: f64,
        grad_norm: f64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            what,
            reason: reason.into(),
        }
    }

    /// Short stable code for machine-parsable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "E_VALIDATION",
            Error::Ellipticity { .. } => "E_ELLIPTICITY",
            Error::Solver { .. } => "E_SOLVER",
            Error::Compatibility { .. } => "E_COMPATIBILITY",
            Error::Divergence { .. } => "E_DIVERGENCE",
            Error::Stagnation { .. } => "E_STAGNATION",
            Error::Degenerate(_) => "E_DEGENERATE",
            Error::Config(_) => "E_CONFIG",
            Error::Format(_) => "E_FORMAT",
            Error::Io(_) => "E_IO",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
