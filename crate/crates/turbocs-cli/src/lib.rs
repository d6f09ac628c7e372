//! Monte Carlo harness for the turbo / AMP recovery experiments: runs
//! trial ensembles, aligns them with the matching state-evolution curve and
//! serializes results as CSV. The `turbocs` binary is a thin CLI over this.

use std::fmt;

pub mod config;
pub mod csv;
pub mod experiment;

/// Harness-level failures, mapped onto process exit codes by the binary:
/// invalid configuration = 1, I/O = 2, numerical failure = 3.
#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Io(_) => 2,
            HarnessError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            HarnessError::Io(msg) => write!(f, "i/o failure: {msg}"),
            HarnessError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<turbocs_core::Error> for HarnessError {
    fn from(e: turbocs_core::Error) -> Self {
        match e {
            turbocs_core::Error::Numerical { .. } => HarnessError::Numerical(e.to_string()),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// 10 log10(x), the scale used for reporting MSE.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
