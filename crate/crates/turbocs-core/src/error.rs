use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors reported by the recovery, prediction and sampling routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is outside its legal range.
    InvalidConfig(&'static str),
    /// Two arguments disagree about the problem dimensions.
    Dimension { expected: usize, got: usize },
    /// A message or denoiser variance is not finite and positive.
    InvalidVariance(f64),
    /// A scalar argument is outside the function's domain.
    Domain(&'static str),
    /// An iterative routine produced a non-finite value; `iteration` is the
    /// 1-based iteration at which it was detected.
    Numerical { context: &'static str, iteration: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidVariance(v) => write!(f, "variance must be finite and positive, got {v}"),
            Error::Domain(msg) => write!(f, "argument out of domain: {msg}"),
            Error::Numerical { context, iteration } => {
                write!(f, "non-finite value in {context} at iteration {iteration}")
            }
        }
    }
}

impl core::error::Error for Error {}
