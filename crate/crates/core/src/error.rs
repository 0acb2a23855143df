use thiserror::Error;

/// Failure modes shared by every module.
///
/// The CLI maps `Validation` to exit code 2, `Io` to 4 and the rest to 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violate a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),
    /// A formula is evaluated outside the regime where it holds.
    #[error("regime: {0}")]
    Regime(String),
    /// A singularity, resonance denominator or forbidden region was hit.
    #[error("domain: {0}")]
    Domain(String),
    /// A query falls outside tabulated or sampled support.
    #[error("out of range: {0}")]
    Range(String),
    /// An iterative method did not reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),
    /// A fit could not be carried out or is degenerate.
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}
