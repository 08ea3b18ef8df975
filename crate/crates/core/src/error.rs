use thiserror::Error;

use crate::encoder::PathMode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("matrix is not symmetric (max |M - Mᵀ| = {0:e})")]
    NotSymmetric(f64),

    #[error("covariance matrix is not physical: symplectic eigenvalue {0} < 1")]
    Unphysical(f64),

    #[error("invalid switch configuration: {0}")]
    InvalidSwitches(String),

    #[error("operation needs the encoder in {expected:?}, it is in {actual:?}")]
    WrongMode { expected: PathMode, actual: PathMode },

    #[error("shot-noise calibration failed: {0}")]
    Calibration(String),

    #[error("paired inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }
}
