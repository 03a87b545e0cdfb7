use thiserror::Error;

/// Errors produced by trace loading, generation, simulation and the
/// counting contracts.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A merge received a view that cannot be a same-round history.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A counting primitive was called with violated preconditions.
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("execution failed in round {round}: {source}")]
    Execution {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
