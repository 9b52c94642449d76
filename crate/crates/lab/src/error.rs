use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Protocol(#[from] lightsecagg_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("party {party} timed out waiting for a message")]
    Timeout { party: u32 },
    #[error("link of party {party} is closed")]
    Closed { party: u32 },
    #[error("unexpected message {kind} at party {party}")]
    Unexpected { party: u32, kind: &'static str },
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("transcript format: {0}")]
    Transcript(String),
    #[error("recovery failed: {0}")]
    RecoveryFailed(String),
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Schema(e.to_string())
    }
}

pub type LabResult<T> = Result<T, LabError>;
