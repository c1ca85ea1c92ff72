use thiserror::Error;

/// Errors raised by the simulation, quadrature and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Green function evaluated at its pole.
    #[error("singular evaluation: x = x0 = {0}")]
    Singular(f64),

    #[error("hypothesis violated: r1 = {r1} exceeds r3/2 = {half_r3}")]
    HypothesisViolation { r1: f64, half_r3: f64 },

    #[error("normalizer out of range: eps = {0} must lie in (0, e^-2)")]
    Range(f64),

    #[error("epsilon {0} is not tabulated in the profile")]
    Lookup(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("incomplete excursion data: {0}")]
    IncompleteData(String),

    #[error("walk visited more than {cap} distinct sites")]
    SiteCapExceeded { cap: usize },

    #[error("quadrature did not converge: estimated error {estimate:e} > tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("local-time refinement disagreement: {coarse} vs {fine} (relative {relative:.3})")]
    Refinement { coarse: f64, fine: f64, relative: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidArgument(msg()))
    }
}
