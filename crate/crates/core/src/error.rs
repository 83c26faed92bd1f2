use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("numerically singular matrix: {0}")]
    Singularity(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("degenerate expansion point for user ({cell}, {user}): {what} = {value:e}")]
    DegenerateExpansion {
        cell: usize,
        user: usize,
        what: &'static str,
        value: f64,
    },

    #[error("subproblem infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure in convex kernel: {0}")]
    Numerical(String),

    #[error("Dinkelbach parameter decreased from {previous:e} to {current:e}")]
    Nonmonotone { previous: f64, current: f64 },

    #[error("no feasible starting point: {0}")]
    InfeasibleStart(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn validation(field: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
