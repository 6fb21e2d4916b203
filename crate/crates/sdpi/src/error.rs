use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("grid truncation lost {lost_mass:.3e} probability mass")]
    Truncation { lost_mass: f64 },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("characteristic-function profile failure: {0}")]
    ProfileFailure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enumeration budget exceeded: {needed} points requested, budget {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used in JSON error records and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Shape(_) => "shape",
            Error::Truncation { .. } => "truncation",
            Error::NoSolution(_) => "no_solution",
            Error::ProfileFailure(_) => "profile_failure",
            Error::Precondition(_) => "precondition",
            Error::Budget { .. } => "budget",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
