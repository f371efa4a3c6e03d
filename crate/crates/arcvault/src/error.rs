use std::path::PathBuf;

use arcvault_core::Md5Hash;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {reason}")]
    RepoConflict { path: PathBuf, reason: String },
    #[error("{0}: not a repository")]
    NotARepo(PathBuf),
    #[error("no default repository is set")]
    NoDefaultRepo,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("repository {0} is busy (writer lock not acquired)")]
    Busy(PathBuf),
    #[error("repository is read-only")]
    ReadOnly,
    #[error("remote unavailable: {url}{}: {reason}", .status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    RemoteUnavailable {
        url: String,
        status: Option<u16>,
        reason: String,
    },
    #[error("corrupt remote index from {0}")]
    CorruptRemoteIndex(String),
    #[error("identity check failed: blob for {expected} digests to {actual}")]
    IdentityMismatch { expected: Md5Hash, actual: Md5Hash },
    #[error("dependent dataset {0} is not in the repository")]
    MissingDependency(Md5Hash),
    #[error("unknown input artifact {0}")]
    UnknownInput(Md5Hash),
    #[error("provenance cycle through {0}")]
    CyclicProvenance(Md5Hash),
    #[error("no session recorded for {0}")]
    NoSessionRecorded(Md5Hash),
    #[error("prefix {prefix} matches {count} artifacts")]
    Ambiguous { prefix: String, count: usize },
    #[error("search needs at least one pattern")]
    EmptyQuery,
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] arcvault_core::Error),
    #[error("index: {0}")]
    Index(#[from] rusqlite::Error),
    #[error("zip: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
