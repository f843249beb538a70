use std::io;

/// Errors surfaced by the library and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid sample: vector contains a non-finite entry")]
    NonFinite,

    #[error("unknown preset `{name}`; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("unknown policy `{0}`; valid policies: disjoint, shared, netlinucb, netsgducb")]
    UnknownPolicy(String),

    #[error("invalid topology `{label}`: {reason}")]
    Topology { label: String, reason: String },

    #[error("runs disagree on horizon: {0} vs {1}")]
    HorizonMismatch(usize, usize),

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}
