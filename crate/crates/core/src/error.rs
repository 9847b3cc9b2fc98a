use thiserror::Error;

/// Errors raised by the solver, its subsolvers and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("boundary tag conflict: {0}")]
    Conflict(String),

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e}){}", .element.map(|e| format!(", worst element {e}")).unwrap_or_default())]
    Solver {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        element: Option<usize>,
    },

    #[error("alternate minimization did not converge at step {step} (t = {time}): {reason}")]
    NonConvergence {
        step: usize,
        time: f64,
        reason: String,
        energy_history: Vec<f64>,
    },

    #[error("index error: {0}")]
    Index(String),

    #[error("config error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config validation error for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::UnknownPreset(_)
            | Error::InvalidParameter { .. }
            | Error::Conflict(_) => 2,
            Error::Solver { .. } | Error::NonConvergence { .. } | Error::Constraint(_) => 3,
            Error::Io(_) | Error::Format(_) => 4,
            Error::Shape(_) | Error::Index(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
