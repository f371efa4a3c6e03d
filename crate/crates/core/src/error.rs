use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("malformed hash `{0}`: expected 32 lowercase hex characters")]
    MalformedHash(String),
    #[error("malformed hash prefix `{0}`: expected 1 to 32 hex characters")]
    MalformedPrefix(String),
    #[error("malformed tag `{0}`: expected `key:value`")]
    MalformedTag(String),
    #[error("malformed timestamp `{0}`: expected `YYYY-MM-DD HH:MM:SS`")]
    MalformedTimestamp(String),
    #[error("malformed date `{0}`: expected `YYYY-MM-DD`")]
    MalformedDate(String),
    #[error("invalid date range: {from} is after {to}")]
    InvalidDateRange { from: String, to: String },
    #[error("malformed address `{0}`")]
    MalformedAddress(String),
    #[error("malformed URL template: {0}")]
    MalformedTemplate(String),
    #[error("malformed session manifest: {0}")]
    MalformedManifest(String),
}
