//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building models or evaluating formulas.
///
/// Variants are grouped by how callers should react: `InvalidParameter` and
/// `Parse` are caller mistakes, `Unsupported` is a contract violation (asking
/// a component set for a component the policy does not define), and the last
/// two signal numerical trouble that no retry will fix.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or query field failed validation.
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter {
        field: &'static str,
        message: String,
    },

    /// A textual form (distribution literal, config file, policy name) did
    /// not parse.
    #[error("parse error: {0}")]
    Parse(String),

    /// The operation is not defined for the given inputs (for example a
    /// component LST that the selected policy does not have).
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A linear system could not be solved.
    #[error("singular linear system in {context}{}", diagnostic.as_ref().map(|d| format!(" ({d})")).unwrap_or_default())]
    SingularSystem {
        context: &'static str,
        diagnostic: Option<String>,
    },

    /// Two independent evaluation routes disagreed, or a quantity violated a
    /// hard mathematical bound (negative variance, residual too large, ...).
    #[error("numerical inconsistency in {context}: {detail}")]
    NumericalInconsistency {
        context: &'static str,
        detail: String,
    },
}

impl Error {
    /// Shorthand for `InvalidParameter`.
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }

    /// Shorthand for `NumericalInconsistency`.
    pub(crate) fn numeric(context: &'static str, detail: impl Into<String>) -> Self {
        Error::NumericalInconsistency {
            context,
            detail: detail.into(),
        }
    }
}
