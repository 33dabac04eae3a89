use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge (estimate {estimate}, error estimate {error_estimate})")]
    NonConvergence { estimate: f64, error_estimate: f64 },

    #[error("integral diverges at an endpoint (partial estimate {partial})")]
    Divergent { partial: f64 },

    #[error("function returned NaN at {at}")]
    NotANumber { at: f64 },

    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },

    #[error("operation does not support point-mass weights: {0}")]
    AtomsUnsupported(String),

    #[error("loss is not proper: {0}")]
    Improper(String),

    #[error("weight is not strictly positive at {at}")]
    NotStrictlyProper { at: f64 },

    #[error("not a proper composite loss: {0}")]
    NotProperComposite(String),

    #[error("margin loss has flat spots (phi' = 0 near v = {at}); the link is not unique")]
    FlatSpot { at: f64 },

    #[error("value {value} outside the link range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
