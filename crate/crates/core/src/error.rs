use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    #[error("no convergence after {iterations} iterations (last change {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("population cap of {cap} individuals exceeded")]
    Resource { cap: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("arithmetic overflow: {0}")]
    Arithmetic(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for caller mistakes (bad flags, bad ranges) as opposed to
    /// numeric or resource failures during a run.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_)
                | Error::Index { .. }
                | Error::Unsupported(_)
                | Error::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
