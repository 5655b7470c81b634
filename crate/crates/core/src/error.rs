use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("integration diverged at step {step}: {reason}")]
    Divergence { step: usize, reason: String },

    #[error("strategy {0} is not memory-one")]
    NotMemoryOne(String),

    #[error("markov chain is not ergodic ({0}); simulate the match instead")]
    NonErgodic(String),

    #[error("unknown preset {name:?}; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Param(msg.into())
}
