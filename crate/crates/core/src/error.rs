use alloc::string::String;

/// Errors raised by the field substrate, the codes and the protocol state
/// machines.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is outside the supported range [2, 2^32)")]
    ModulusOutOfRange(u64),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("insufficient shares: need {needed}, have {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("value {value} at index {index} exceeds the clip range")]
    ClipOverflow { index: usize, value: String },
    #[error("duplicate share from user {from}")]
    DuplicateShare { from: u32 },
    #[error("missing share from user {from}")]
    MissingShare { from: u32 },
    #[error("both seed and key shares requested for user {owner}")]
    ShareConflict { owner: u32 },
    #[error("operation not allowed in phase {phase}")]
    WrongPhase { phase: &'static str },
    #[error("unknown user {0}")]
    UnknownUser(u32),
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("malformed message: {0}")]
    Malformed(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
