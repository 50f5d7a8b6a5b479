//! Error type shared by every module of the solver.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("{module}: invalid input: {message}")]
    InvalidInput {
        module: &'static str,
        message: String,
    },

    /// The requested run does not fit the configured table or enumeration budget.
    #[error("{module}: capacity exceeded: {what} requires {required} but the budget is {available}")]
    Capacity {
        module: &'static str,
        what: &'static str,
        required: String,
        available: String,
    },

    /// A state or cost became non-finite.
    #[error("{module}: numerical failure at stage {stage}: {message}")]
    Numerical {
        module: &'static str,
        stage: usize,
        message: String,
    },

    /// An internal invariant was broken; indicates a bug rather than bad input.
    #[error("{module}: internal invariant violated: {message}")]
    Internal {
        module: &'static str,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("configuration error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(module: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            module,
            message: message.into(),
        }
    }

    pub(crate) fn capacity(
        module: &'static str,
        what: &'static str,
        required: impl ToString,
        available: impl ToString,
    ) -> Self {
        Error::Capacity {
            module,
            what,
            required: required.to_string(),
            available: available.to_string(),
        }
    }

    pub(crate) fn numerical(module: &'static str, stage: usize, message: impl Into<String>) -> Self {
        Error::Numerical {
            module,
            stage,
            message: message.into(),
        }
    }

    pub(crate) fn internal(module: &'static str, message: impl Into<String>) -> Self {
        Error::Internal {
            module,
            message: message.into(),
        }
    }

    /// The module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidInput { module, .. }
            | Error::Capacity { module, .. }
            | Error::Numerical { module, .. }
            | Error::Internal { module, .. } => module,
            Error::Io(_) => "io",
            Error::Json(_) => "problem",
            Error::Csv(_) => "io",
        }
    }

    /// The time stage, for numerical failures.
    pub fn stage(&self) -> Option<usize> {
        match self {
            Error::Numerical { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
