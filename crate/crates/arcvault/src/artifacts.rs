//! Save, load and remove.

use std::collections::BTreeSet;
use std::fs;
use std::io;

use arcvault_core::session::MANIFEST_CLASS;
use arcvault_core::tag::keys;
use arcvault_core::{
    capture_session_manifest, make_miniature, ArtifactEnvelope, ArtifactKind, ArtifactRow, HashPrefix, Md5Hash,
    MiniatureFormat, Payload, Tag, TagRecord, Timestamp,
};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::Index;
use crate::repo::{gallery_file_name, parse_gallery_name, Repository};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaveOptions {
    /// Tags appended verbatim after the automatic ones.
    pub user_tags: Vec<String>,
    /// Archive a plot's attached dataset as its own artifact.
    pub archive_data: bool,
    /// Archive the session manifest and link it with `session_info:`.
    pub archive_session: bool,
}

impl Default for SaveOptions {
    fn default() -> Self {
        SaveOptions {
            user_tags: Vec::new(),
            archive_data: true,
            archive_session: true,
        }
    }
}

impl SaveOptions {
    pub fn bare() -> Self {
        SaveOptions {
            user_tags: Vec::new(),
            archive_data: false,
            archive_session: false,
        }
    }

    pub fn tag(mut self, tag: impl Into<String>) -> Self {
        self.user_tags.push(tag.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SaveOutcome {
    pub md5hash: Md5Hash,
    /// Hash of the dependent dataset, when one was archived.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_hash: Option<Md5Hash>,
}

/// A loaded artifact together with its validated primary bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedArtifact {
    pub hash: Md5Hash,
    pub envelope: ArtifactEnvelope,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RemoveReport {
    pub removed: Vec<Md5Hash>,
    /// Requested hashes that were not in the repository.
    pub skipped: Vec<Md5Hash>,
    /// Datasets removed because nothing referenced them anymore.
    pub orphaned_data: Vec<Md5Hash>,
}

impl RemoveReport {
    pub fn count(&self) -> usize {
        self.removed.len() + self.orphaned_data.len()
    }
}

/// Everything one save event writes.
#[derive(Default)]
struct Stage {
    rows: Vec<ArtifactRow>,
    tags: Vec<TagRecord>,
    files: Vec<(String, Vec<u8>)>,
    staged: BTreeSet<Md5Hash>,
}

impl Stage {
    fn file(&mut self, name: String, bytes: Vec<u8>) {
        if !self.files.iter().any(|(n, _)| *n == name) {
            self.files.push((name, bytes));
        }
    }
}

fn parse_user_tags(raw: &[String]) -> Result<Vec<Tag>> {
    Ok(raw.iter().map(|t| Tag::new(t.as_str())).collect::<Result<_, _>>()?)
}

impl Repository {
    /// Saves `envelope` and returns its hash.
    pub fn save(&mut self, envelope: &ArtifactEnvelope, options: &SaveOptions) -> Result<SaveOutcome> {
        let _lock = self.write_lock()?;
        self.save_locked(envelope, options, Vec::new())
    }

    /// Save chain with extra tags appended to the main artifact, all within
    /// one save event.
    pub(crate) fn save_locked(
        &mut self,
        envelope: &ArtifactEnvelope,
        options: &SaveOptions,
        extra: Vec<Tag>,
    ) -> Result<SaveOutcome> {
        envelope.validate()?;
        let user = parse_user_tags(&options.user_tags)?;
        let at = self.clock.now();
        let mut stage = Stage::default();

        let session = if options.archive_session {
            Some(self.stage_session(&mut stage, at)?)
        } else {
            None
        };

        let hash = envelope.hash()?;
        let data_ref = match &envelope.payload {
            Payload::PlotSpec(p) => p.data_ref,
            _ => None,
        };
        let mut data_hash = None;
        if let Some(data_ref) = data_ref {
            let relation = vec![Tag::from_parts(keys::RELATION_WITH, hash)];
            match &envelope.dependent_data {
                Some(data) if options.archive_data => {
                    let data_env = ArtifactEnvelope::dataset(format!("{}.data", envelope.name), data.clone());
                    let h = self.stage_artifact(&mut stage, &data_env, at, session, &[], relation)?;
                    data_hash = Some(h);
                }
                _ => {
                    if !self.contains(&data_ref)? {
                        return Err(Error::MissingDependency(data_ref));
                    }
                    // relation only; the dataset itself is already archived
                    stage
                        .tags
                        .extend(relation.iter().map(|t| TagRecord::new(data_ref, t, at)));
                }
            }
        }

        self.stage_artifact(&mut stage, envelope, at, session, &user, extra)?;
        self.write_records(&stage.rows, &stage.tags, &stage.files, false)?;
        Ok(SaveOutcome {
            md5hash: hash,
            data_hash,
        })
    }

    fn stage_session(&self, stage: &mut Stage, at: Timestamp) -> Result<Md5Hash> {
        let manifest = capture_session_manifest(self.probe.as_ref());
        let env = manifest.to_envelope()?;
        let hash = env.hash()?;
        if !self.contains(&hash)? && !stage.staged.contains(&hash) {
            let class = vec![Tag::from_parts(keys::CLASS, MANIFEST_CLASS)];
            self.stage_artifact(stage, &env, at, None, &[], class)?;
        }
        Ok(hash)
    }

    fn stage_artifact(
        &self,
        stage: &mut Stage,
        envelope: &ArtifactEnvelope,
        at: Timestamp,
        session: Option<Md5Hash>,
        user: &[Tag],
        extra: Vec<Tag>,
    ) -> Result<Md5Hash> {
        let bytes = envelope.canonical_bytes()?;
        let hash = envelope.hash()?;
        stage.file(gallery_file_name(&hash, envelope.primary_format()), bytes);
        if let Some(image) = &envelope.image {
            stage.file(gallery_file_name(&hash, MiniatureFormat::Png.extension()), image.clone());
        }

        let mut tags = self.extractors.tags_for(envelope, at);
        let miniature = make_miniature(envelope);
        let ext = miniature.format.extension();
        stage.file(gallery_file_name(&hash, ext), miniature.bytes);
        let format_tag = Tag::from_parts(keys::FORMAT, ext);
        if !tags.contains(&format_tag) {
            tags.push(format_tag);
        }
        if let Some(m) = session {
            tags.push(Tag::from_parts(keys::SESSION_INFO, m));
        }
        tags.extend(user.iter().cloned());
        tags.extend(extra);

        stage.rows.push(ArtifactRow {
            md5hash: hash,
            name: envelope.name.clone(),
            created_date: at,
        });
        stage.tags.extend(tags.iter().map(|t| TagRecord::new(hash, t, at)));
        stage.staged.insert(hash);
        Ok(hash)
    }

    /// All artifacts whose hash starts with `prefix`, ordered by hash.
    pub fn load(&self, prefix: &HashPrefix) -> Result<Vec<LoadedArtifact>> {
        let hashes = self.index.hashes_with_prefix(prefix)?;
        if hashes.is_empty() {
            return Err(Error::NotFound(format!("no artifact matches {}", prefix.as_str())));
        }
        hashes.iter().map(|h| self.load_hash(h)).collect()
    }

    pub fn load_hash(&self, hash: &Md5Hash) -> Result<LoadedArtifact> {
        let tags = self.tags_of(hash)?;
        let rows = self.artifact_rows_of(hash)?;
        if rows.is_empty() {
            return Err(Error::NotFound(format!("artifact {hash}")));
        }
        let kind = tags
            .iter()
            .filter_map(|t| t.value_of(keys::CLASS))
            .find_map(|c| c.parse::<ArtifactKind>().ok())
            .unwrap_or(ArtifactKind::Generic);
        let formats: Vec<&str> = tags.iter().filter_map(|t| t.value_of(keys::FORMAT)).collect();
        let primary = match kind {
            ArtifactKind::Generic => formats.first().copied().unwrap_or("bin"),
            k => k.primary_format(),
        };
        let bytes = self.blob(hash, primary)?;
        let actual = arcvault_core::compute_hash(&bytes);
        if actual != *hash {
            return Err(Error::IdentityMismatch {
                expected: *hash,
                actual,
            });
        }
        let payload = Payload::decode(kind, primary, &bytes)?;
        let name = tags
            .iter()
            .find_map(|t| t.value_of(keys::NAME))
            .map_or_else(|| rows[0].name.clone(), String::from);
        let mut envelope = ArtifactEnvelope::new(name, payload);
        if kind == ArtifactKind::PlotSpec && formats.contains(&MiniatureFormat::Png.extension()) {
            envelope.image = Some(self.blob(hash, MiniatureFormat::Png.extension())?);
        }
        Ok(LoadedArtifact {
            hash: *hash,
            envelope,
            bytes,
        })
    }

    /// Removes artifacts with all their tags and files.
    pub fn remove(&mut self, hashes: &[Md5Hash], remove_orphaned_data: bool) -> Result<RemoveReport> {
        let _lock = self.write_lock()?;
        let mut report = RemoveReport::default();
        let mut gone: BTreeSet<Md5Hash> = BTreeSet::new();
        let mut targets = Vec::new();
        for h in hashes {
            if gone.contains(h) {
                continue;
            }
            if self.contains(h)? {
                gone.insert(*h);
                targets.push(*h);
            } else if !report.skipped.contains(h) {
                report.skipped.push(*h);
            }
        }

        let mut orphans = Vec::new();
        if remove_orphaned_data {
            loop {
                let mut found = Vec::new();
                for candidate in self.index.hashes_with_tag("class:dataset")? {
                    if gone.contains(&candidate) {
                        continue;
                    }
                    let relations = arcvault_core::provenance::data_relations(&self.tags_of(&candidate)?);
                    let mut pointed_at_removed = false;
                    let mut all_gone = !relations.is_empty();
                    for r in &relations {
                        if gone.contains(r) {
                            pointed_at_removed = true;
                        } else if self.contains(r)? {
                            all_gone = false;
                        }
                    }
                    if pointed_at_removed && all_gone {
                        found.push(candidate);
                    }
                }
                if found.is_empty() {
                    break;
                }
                gone.extend(found.iter().copied());
                orphans.extend(found);
            }
        }

        let all: Vec<Md5Hash> = targets.iter().chain(&orphans).copied().collect();
        let tx = self.index.transaction()?;
        for h in &all {
            Index::delete_artifact(&tx, h)?;
        }
        tx.commit()?;
        for h in &all {
            self.delete_files_of(h)?;
        }
        report.removed = targets;
        report.orphaned_data = orphans;
        Ok(report)
    }

    fn delete_files_of(&self, hash: &Md5Hash) -> Result<()> {
        for name in self.gallery_files_of(hash)? {
            debug_assert!(parse_gallery_name(&name).is_some());
            match fs::remove_file(self.gallery_dir().join(&name)) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e.into()),
                _ => {}
            }
        }
        Ok(())
    }
}
