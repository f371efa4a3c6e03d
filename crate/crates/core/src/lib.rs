//! Allocation-only core of arcvault.
//!
//! Everything in this crate is pure: artifact identities, canonical
//! encodings, tag extraction, miniatures, address and URL-template grammar,
//! pedigree reconstruction over an abstract tag source, session manifests
//! and the markdown gallery renderer. Storage, networking and the CLI live
//! in the `arcvault` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod address;
pub mod canonical;
pub mod csv;
pub mod envelope;
pub mod error;
pub mod extract;
pub mod gallery;
pub mod hash;
pub mod miniature;
pub mod provenance;
pub mod search;
pub mod session;
pub mod summary;
pub mod tag;
pub mod template;
pub mod time;

pub use address::{parse_address, Address, AddressBase, Hook};
pub use envelope::{
    canonicalize, ArtifactEnvelope, ArtifactKind, Cell, Column, DatasetPayload, GenericPayload,
    LinearModelPayload, Payload, PlotSpecPayload,
};
pub use error::{Error, Result};
pub use extract::{extract_tags, ExtractorRegistry, TagExtractor};
pub use hash::{compute_hash, HashPrefix, Md5Hash};
pub use miniature::{make_miniature, Miniature, MiniatureFormat, MINIATURE_ROWS};
pub use provenance::{trace_pedigree, HistoryError, Pedigree, PedigreeEntry, TagLookup};
pub use search::{combine, SearchPattern};
pub use session::{capture_session_manifest, ComponentVersion, EnvironmentProbe, SessionManifest};
pub use summary::RepoSummary;
pub use tag::{ArtifactRow, Tag, TagRecord};
pub use template::{HostProfile, RemoteTemplate};
pub use time::{Clock, FixedClock, Timestamp};
