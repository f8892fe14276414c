//! Error type shared by all modules.

/// Library error. `Validation` means the caller handed in unusable input;
/// the other variants are runtime failures of an otherwise valid request.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input rejected before any computation ran.
    #[error("invalid {field}: {message}")]
    Validation {
        /// Name of the offending parameter or field.
        field: String,
        /// What was wrong with it.
        message: String,
    },

    /// An iterative scheme failed its convergence gate.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A Bloch integration left the physical region for a density matrix.
    #[error("density matrix left the physical region at t = {t:.6e} s (excess {excess:.3e})")]
    Positivity {
        /// Integration time at which the violation was detected, s.
        t: f64,
        /// Magnitude of the constraint violation.
        excess: f64,
    },

    /// A least-squares fit could not produce a usable result.
    #[error("fit failure: {0}")]
    Fit(String),

    /// I/O failure while reading or writing CSV.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed CSV input.
    #[error("csv parse error at line {line}: {message}")]
    CsvParse {
        /// 1-based line number in the input.
        line: usize,
        /// What could not be parsed.
        message: String,
    },
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a validation error.
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Bail out with a validation error unless `cond` holds.
macro_rules! ensure {
    ($cond:expr, $field:expr, $msg:expr) => {
        if !($cond) {
            return Err($crate::error::Error::invalid($field, $msg));
        }
    };
}
pub(crate) use ensure;
