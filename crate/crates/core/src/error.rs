use thiserror::Error;

use crate::estimation::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient triggers (n={n} < {required})")]
    InsufficientData { n: usize, required: usize },

    #[error("insufficient replications ({got} < {required})")]
    InsufficientReplications { got: usize, required: usize },

    /// Every restart hit the iteration cap. Carries the lowest-objective result.
    #[error("optimizer did not converge in any restart (best objective {:.6e})", best.objective)]
    NonConvergence { best: Box<FitResult> },

    #[error("degenerate trigger geometry: {0}")]
    DegenerateGeometry(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
