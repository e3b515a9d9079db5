//! Failure classes surfaced by the numerical kernels.

use alloc::string::String;
use core::fmt;

/// Errors reported by builders and solvers.
///
/// `Config` means a parameter combination violates a documented precondition
/// and the computation never started. `Numerical` means a solve broke down
/// mid-flight (non-finite values, unsatisfiable system); state should be
/// discarded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    Config(String),
    Numerical(String),
}

impl CoreError {
    pub fn config(msg: impl Into<String>) -> Self {
        CoreError::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CoreError::Numerical(msg.into())
    }
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Config(msg) => write!(f, "configuration error: {msg}"),
            CoreError::Numerical(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}

pub type Result<T> = core::result::Result<T, CoreError>;
