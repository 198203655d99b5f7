use thiserror::Error;

use crate::analysis::IterateTrace;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid state: {0}")]
    State(String),

    /// The iterate became non-finite or left the divergence guard ball.
    /// Carries every trace row recorded before the blowup.
    #[error("numeric divergence at iteration {iteration}")]
    Divergence {
        iteration: usize,
        trace: Box<IterateTrace>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
