//! Pipeline steps, pedigrees and session manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use arcvault_core::provenance::HistoryError;
use arcvault_core::session::ComponentVersion;
use arcvault_core::tag::keys;
use arcvault_core::{
    trace_pedigree, ArtifactEnvelope, EnvironmentProbe, Md5Hash, Pedigree, SessionManifest, Tag, TagLookup,
    TagRecord,
};

use crate::artifacts::SaveOptions;
use crate::error::{Error, Result};
use crate::repo::Repository;

pub const TOOL_NAME: &str = "arcvault";

/// Probe describing this build, plus any components declared in config.
#[derive(Clone, Debug, Default)]
pub struct DefaultProbe {
    pub components: BTreeMap<String, ComponentVersion>,
}

impl EnvironmentProbe for DefaultProbe {
    fn tool_name(&self) -> String {
        TOOL_NAME.into()
    }

    fn tool_version(&self) -> String {
        env!("CARGO_PKG_VERSION").into()
    }

    fn platform(&self) -> String {
        format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS)
    }

    fn components(&self) -> Vec<(String, ComponentVersion)> {
        self.components.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

impl TagLookup for Repository {
    type Error = Error;

    fn tags_of(&self, hash: &Md5Hash) -> Result<Vec<TagRecord>> {
        Repository::tags_of(self, hash)
    }
}

impl Repository {
    /// Saves `output` as the result of applying `call` to `input`.
    pub fn record_step(
        &mut self,
        input: Option<Md5Hash>,
        call: &str,
        output: &ArtifactEnvelope,
        options: &SaveOptions,
    ) -> Result<Md5Hash> {
        let _lock = self.write_lock()?;
        let mut extra = Vec::new();
        if let Some(input) = input {
            if !self.contains(&input)? {
                return Err(Error::UnknownInput(input));
            }
            extra.push(Tag::from_parts(keys::RELATION_WITH, input));
        }
        extra.push(Tag::from_parts(keys::CALL, call));
        Ok(self.save_locked(output, options, extra)?.md5hash)
    }

    pub fn history(&self, hash: &Md5Hash) -> Result<Pedigree> {
        if !self.contains(hash)? {
            return Err(Error::NotFound(format!("artifact {hash}")));
        }
        trace_pedigree(self, *hash).map_err(|e| match e {
            HistoryError::Cyclic(h) => Error::CyclicProvenance(h),
            HistoryError::Lookup(e) => e,
        })
    }

    /// The session manifest linked from `hash`.
    pub fn session_of(&self, hash: &Md5Hash) -> Result<SessionManifest> {
        let tags = self.tags_of(hash)?;
        if tags.is_empty() && !self.contains(hash)? {
            return Err(Error::NotFound(format!("artifact {hash}")));
        }
        let Some(link) = tags.iter().rev().find_map(|t| t.value_of(keys::SESSION_INFO)) else {
            return Err(Error::NoSessionRecorded(*hash));
        };
        let manifest_hash: Md5Hash = link.parse()?;
        let loaded = self.load_hash(&manifest_hash)?;
        Ok(SessionManifest::from_bytes(&loaded.bytes)?)
    }

    /// Values of the `format:` tags of `hash`.
    pub fn formats(&self, hash: &Md5Hash) -> Result<Vec<String>> {
        if !self.contains(hash)? {
            return Err(Error::NotFound(format!("artifact {hash}")));
        }
        self.formats_of(hash)
    }
}

pub fn emit_lockfile(manifest: &SessionManifest, out: &Path) -> Result<()> {
    fs::write(out, manifest.render_lockfile())?;
    Ok(())
}
