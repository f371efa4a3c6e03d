//! Content-addressed artifact repositories: a SQLite tag index plus a
//! gallery of blobs, searchable by tag and date, with provenance chains,
//! read-only HTTP remotes, a CLI and a JSON API.
//!
//! ```no_run
//! use arcvault::{Repository, SaveOptions};
//! use arcvault_core::{ArtifactEnvelope, Column, DatasetPayload, SearchPattern};
//!
//! let mut repo = Repository::create("arepo")?;
//! let data = DatasetPayload::new(vec![Column::new("x", [1.0, 2.0])])?;
//! let saved = repo.save(&ArtifactEnvelope::dataset("xs", data), &SaveOptions::default())?;
//! let hits = repo.search(&[SearchPattern::parse("name:xs")?], true)?;
//! assert_eq!(hits, vec![saved.md5hash]);
//! # Ok::<(), arcvault::Error>(())
//! ```

pub mod api;
pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod index;
pub mod locator;
pub mod provenance;
pub mod publishing;
pub mod remote;
pub mod repo;
pub mod search;
pub mod watch;

pub use artifacts::{LoadedArtifact, RemoveReport, SaveOptions, SaveOutcome};
pub use error::{Error, Result};
pub use locator::{aread, set_default_repo, Defaults, RepoLocator};
pub use provenance::{emit_lockfile, DefaultProbe};
pub use publishing::{create_md_gallery, render_hook};
pub use remote::{copy_artifacts, parse_remote_spec, unzip_repo, zip_repo, CopyReport, RemoteLocator};
pub use repo::{IntegrityReport, Repository, SystemClock};
