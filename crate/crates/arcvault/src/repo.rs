//! Repository layout and lifecycle.
//!
//! ```text
//! <root>/backpack.db           relational index
//! <root>/gallery/<hash>.<ext>  blobs and miniatures
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use arcvault_core::tag::{keys, split_tag};
use arcvault_core::{
    ArtifactRow, Clock, EnvironmentProbe, ExtractorRegistry, HashPrefix, Md5Hash, RepoSummary, TagRecord, Timestamp,
};
use chrono::Utc;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{Index, INDEX_FILE};
use crate::provenance::DefaultProbe;
use crate::remote::RemoteLocator;

pub const GALLERY_DIR: &str = "gallery";

const DEFAULT_LOCK_TIMEOUT: Duration = Duration::from_secs(10);

/// Wall clock, truncated to seconds.
#[derive(Clone, Copy, Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp::new(Utc::now().naive_utc())
    }
}

pub(crate) enum Origin {
    Local,
    Remote(RemoteLocator),
}

/// A repository handle: local and writable, or a read-only cached view of a
/// remote one.
pub struct Repository {
    root: PathBuf,
    pub(crate) index: Index,
    pub(crate) origin: Origin,
    pub(crate) clock: Box<dyn Clock + Send + Sync>,
    pub(crate) probe: Box<dyn EnvironmentProbe + Send + Sync>,
    pub(crate) extractors: ExtractorRegistry,
    lock_timeout: Duration,
}

/// Splits `<32-hex>.<ext>` gallery file names.
pub fn parse_gallery_name(name: &str) -> Option<(Md5Hash, &str)> {
    let (stem, ext) = name.split_once('.')?;
    let ok_ext = !ext.is_empty() && ext.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
    if !ok_ext {
        return None;
    }
    Some((stem.parse().ok()?, ext))
}

pub fn gallery_file_name(hash: &Md5Hash, ext: &str) -> String {
    format!("{hash}.{ext}")
}

fn is_repo_layout(path: &Path) -> bool {
    path.join(INDEX_FILE).is_file() && path.join(GALLERY_DIR).is_dir()
}

fn conflict(path: &Path, reason: impl Into<String>) -> Error {
    Error::RepoConflict {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Lists the gallery, rejecting anything that is not `<hash>.<ext>`.
fn validate_gallery(path: &Path) -> Result<()> {
    for entry in fs::read_dir(path.join(GALLERY_DIR))? {
        let entry = entry?;
        let name = entry.file_name();
        let valid = entry.file_type()?.is_file()
            && name.to_str().and_then(parse_gallery_name).is_some();
        if !valid {
            return Err(conflict(
                path,
                format!("unexpected gallery entry {}", name.to_string_lossy()),
            ));
        }
    }
    Ok(())
}

pub(crate) struct WriteLock {
    file: File,
}

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = self.file.unlock();
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to a fresh fsynced temporary file in `dir`.
pub(crate) fn write_temp(dir: &Path, bytes: &[u8]) -> Result<PathBuf> {
    let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = dir.join(format!(".arcvault-tmp-{}-{n}", std::process::id()));
    let result = File::create(&tmp).and_then(|mut f| {
        f.write_all(bytes)?;
        f.sync_all()
    });
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(tmp)
}

/// Renames a temporary file into place, removing it on failure.
pub(crate) fn commit_temp(tmp: &Path, dest: &Path) -> Result<()> {
    if let Err(e) = fs::rename(tmp, dest) {
        let _ = fs::remove_file(tmp);
        return Err(e.into());
    }
    if let Some(parent) = dest.parent() {
        // directory fsync is best effort; not every filesystem supports it
        let _ = File::open(parent).and_then(|d| d.sync_all());
    }
    Ok(())
}

/// Writes `bytes` to `dest` through a temporary file in `tmp_dir`.
pub(crate) fn write_atomic(tmp_dir: &Path, dest: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = write_temp(tmp_dir, bytes)?;
    commit_temp(&tmp, dest)
}

impl Repository {
    fn from_parts(root: PathBuf, index: Index, origin: Origin) -> Self {
        Repository {
            root,
            index,
            origin,
            clock: Box::new(SystemClock),
            probe: Box::new(DefaultProbe::default()),
            extractors: ExtractorRegistry::default(),
            lock_timeout: DEFAULT_LOCK_TIMEOUT,
        }
    }

    /// Creates an empty repository, or opens the one already at `path`.
    pub fn create(path: impl AsRef<Path>) -> Result<Repository> {
        let path = path.as_ref();
        if path.exists() {
            if !path.is_dir() {
                return Err(conflict(path, "exists and is not a directory"));
            }
            if is_repo_layout(path) {
                validate_gallery(path)?;
                let index = Index::open(&path.join(INDEX_FILE), false)
                    .map_err(|_| conflict(path, "backpack.db is not a valid index"))?;
                if !index.has_schema().unwrap_or(false) {
                    return Err(conflict(path, "backpack.db lacks the artifact/tag tables"));
                }
                return Ok(Self::from_parts(path.to_path_buf(), index, Origin::Local));
            }
            if fs::read_dir(path)?.next().is_some() {
                return Err(conflict(path, "directory is not empty and is not a repository"));
            }
        }
        fs::create_dir_all(path.join(GALLERY_DIR))?;
        let index = Index::create(&path.join(INDEX_FILE))?;
        Ok(Self::from_parts(path.to_path_buf(), index, Origin::Local))
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Repository> {
        let path = path.as_ref();
        if !is_repo_layout(path) {
            return Err(Error::NotARepo(path.to_path_buf()));
        }
        let index = Index::open(&path.join(INDEX_FILE), false)?;
        if !index.has_schema()? {
            return Err(Error::NotARepo(path.to_path_buf()));
        }
        Ok(Self::from_parts(path.to_path_buf(), index, Origin::Local))
    }

    pub(crate) fn open_remote_view(cache: &Path, locator: RemoteLocator) -> Result<Repository> {
        let index = Index::open(&cache.join(INDEX_FILE), true)?;
        Ok(Self::from_parts(cache.to_path_buf(), index, Origin::Remote(locator)))
    }

    /// Removes a repository directory and everything in it.
    pub fn delete(path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if !is_repo_layout(path) {
            return Err(Error::NotARepo(path.to_path_buf()));
        }
        fs::remove_dir_all(path)?;
        Ok(())
    }

    pub fn is_repository(path: impl AsRef<Path>) -> bool {
        is_repo_layout(path.as_ref())
    }

    pub fn with_clock(mut self, clock: impl Clock + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn with_probe(mut self, probe: impl EnvironmentProbe + Send + Sync + 'static) -> Self {
        self.probe = Box::new(probe);
        self
    }

    pub fn with_extractors(mut self, extractors: ExtractorRegistry) -> Self {
        self.extractors = extractors;
        self
    }

    pub fn with_lock_timeout(mut self, timeout: Duration) -> Self {
        self.lock_timeout = timeout;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn gallery_dir(&self) -> PathBuf {
        self.root.join(GALLERY_DIR)
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    pub fn is_read_only(&self) -> bool {
        matches!(self.origin, Origin::Remote(_))
    }

    pub fn remote(&self) -> Option<&RemoteLocator> {
        match &self.origin {
            Origin::Remote(r) => Some(r),
            Origin::Local => None,
        }
    }

    pub(crate) fn ensure_writable(&self) -> Result<()> {
        if self.is_read_only() {
            return Err(Error::ReadOnly);
        }
        Ok(())
    }

    /// Takes the repository-wide writer lock, waiting up to the lock timeout.
    /// The lock is a `flock` on the gallery directory, not on backpack.db:
    /// closing any descriptor of backpack.db drops SQLite's POSIX locks.
    pub(crate) fn write_lock(&self) -> Result<WriteLock> {
        self.ensure_writable()?;
        let file = File::open(self.gallery_dir())?;
        let deadline = Instant::now() + self.lock_timeout;
        loop {
            match file.try_lock() {
                Ok(()) => return Ok(WriteLock { file }),
                Err(fs::TryLockError::WouldBlock) if Instant::now() < deadline => {
                    thread::sleep(Duration::from_millis(20));
                }
                Err(fs::TryLockError::WouldBlock) => return Err(Error::Busy(self.root.clone())),
                Err(fs::TryLockError::Error(e)) => return Err(e.into()),
            }
        }
    }

    pub fn contains(&self, hash: &Md5Hash) -> Result<bool> {
        self.index.contains(hash)
    }

    /// The single artifact whose hash starts with `prefix`.
    pub fn resolve_prefix(&self, prefix: &str) -> Result<Md5Hash> {
        let prefix: HashPrefix = prefix.parse()?;
        let hashes = self.index.hashes_with_prefix(&prefix)?;
        match hashes.as_slice() {
            [h] => Ok(*h),
            [] => Err(Error::NotFound(format!("no artifact matches {}", prefix.as_str()))),
            _ => Err(Error::Ambiguous {
                prefix: prefix.as_str().into(),
                count: hashes.len(),
            }),
        }
    }

    /// All artifact rows, one per save attempt.
    pub fn artifacts(&self) -> Result<Vec<ArtifactRow>> {
        self.index.artifact_rows()
    }

    /// All tag rows, ordered by createdDate then insertion order.
    pub fn tags(&self) -> Result<Vec<TagRecord>> {
        self.index.tag_rows()
    }

    /// Tags of one artifact in insertion order.
    pub fn tags_of(&self, hash: &Md5Hash) -> Result<Vec<TagRecord>> {
        self.index.tags_of(hash)
    }

    pub fn artifact_rows_of(&self, hash: &Md5Hash) -> Result<Vec<ArtifactRow>> {
        self.index.artifact_rows_of(hash)
    }

    pub fn hashes(&self) -> Result<Vec<Md5Hash>> {
        self.index.distinct_hashes()
    }

    /// Values of all `format:` tags of `hash`, first occurrence order.
    pub fn formats_of(&self, hash: &Md5Hash) -> Result<Vec<String>> {
        let mut seen = BTreeSet::new();
        Ok(self
            .tags_of(hash)?
            .into_iter()
            .filter_map(|t| t.value_of(keys::FORMAT).map(String::from))
            .filter(|f| seen.insert(f.clone()))
            .collect())
    }

    pub fn summarize(&self) -> Result<RepoSummary> {
        let counts_by_class = self
            .index
            .grouped_counts(
                "SELECT substr(tag, 7), COUNT(DISTINCT artifact) FROM tag \
                 WHERE substr(tag, 1, 6) = 'class:' GROUP BY substr(tag, 7)",
            )?
            .into_iter()
            .collect();
        let dataset_count = self
            .index
            .grouped_counts(
                "SELECT 'dataset', COUNT(DISTINCT artifact) FROM tag WHERE tag = 'class:dataset'",
            )?
            .first()
            .map_or(0, |(_, n)| *n);
        let mut saves_per_day = BTreeMap::new();
        for (stamp, n) in self.index.grouped_counts(
            "SELECT substr(tag, 6), COUNT(*) FROM tag WHERE substr(tag, 1, 5) = 'date:' GROUP BY substr(tag, 6)",
        )? {
            if let Ok(ts) = stamp.parse::<Timestamp>() {
                *saves_per_day.entry(ts.date().to_string()).or_insert(0) += n;
            }
        }
        Ok(RepoSummary {
            artifact_count: self.index.count_distinct_artifacts()?,
            dataset_count,
            counts_by_class,
            saves_per_day,
        })
    }

    /// Reads a gallery file, fetching and caching it first for remote views.
    pub fn blob(&self, hash: &Md5Hash, ext: &str) -> Result<Vec<u8>> {
        let name = gallery_file_name(hash, ext);
        let path = self.gallery_dir().join(&name);
        match fs::read(&path) {
            Ok(bytes) => return Ok(bytes),
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e.into()),
            Err(_) => {}
        }
        match &self.origin {
            Origin::Local => Err(Error::NotFound(format!("blob {name}"))),
            Origin::Remote(remote) => {
                let bytes = remote.fetch(&format!("{GALLERY_DIR}/{name}"))?;
                fs::create_dir_all(self.gallery_dir())?;
                write_atomic(&self.root, &path, &bytes)?;
                Ok(bytes)
            }
        }
    }

    pub(crate) fn write_gallery_file(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let dest = self.gallery_dir().join(name);
        if fs::read(&dest).is_ok_and(|existing| existing == bytes) {
            return Ok(());
        }
        write_atomic(&self.root, &dest, bytes)
    }

    /// Gallery files belonging to `hash` (local files only).
    pub fn gallery_files_of(&self, hash: &Md5Hash) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(self.gallery_dir())? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if parse_gallery_name(&name).is_some_and(|(h, _)| h == *hash) {
                out.push(name);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Inserts rows, tags and gallery files verbatim.
    ///
    /// Rows and tags are treated as multisets: an entry is inserted only as
    /// many times as it is missing, so importing the same records twice is a
    /// no-op. Files are written before the index transaction commits.
    pub fn import(&mut self, rows: &[ArtifactRow], tags: &[TagRecord], files: &[(String, Vec<u8>)]) -> Result<()> {
        let _lock = self.write_lock()?;
        self.write_records(rows, tags, files, true)
    }

    /// Writes files, then commits rows and tags in one transaction. With
    /// `dedupe`, rows already present are not inserted again.
    pub(crate) fn write_records(
        &mut self,
        rows: &[ArtifactRow],
        tags: &[TagRecord],
        files: &[(String, Vec<u8>)],
        dedupe: bool,
    ) -> Result<()> {
        for (name, bytes) in files {
            if parse_gallery_name(name).is_none() {
                return Err(conflict(&self.root, format!("refusing gallery file name {name}")));
            }
            self.write_gallery_file(name, bytes)?;
        }
        let tx = self.index.transaction()?;
        // Occurrences seen so far per triple; counts in the table include
        // rows inserted earlier in this transaction.
        let mut wanted: BTreeMap<(&str, String, String, String), i64> = BTreeMap::new();
        let mut missing = |table: &'static str, key: (String, String, String)| -> Result<bool> {
            if !dedupe {
                return Ok(true);
            }
            let n = wanted.entry((table, key.0.clone(), key.1.clone(), key.2.clone())).or_insert(0);
            *n += 1;
            let sql = match table {
                "artifact" => "SELECT COUNT(*) FROM artifact WHERE md5hash = ?1 AND name = ?2 AND createdDate = ?3",
                _ => "SELECT COUNT(*) FROM tag WHERE artifact = ?1 AND tag = ?2 AND createdDate = ?3",
            };
            let have: i64 = tx.query_row(sql, [&key.0, &key.1, &key.2], |r| r.get(0))?;
            Ok(have < *n)
        };
        for r in rows {
            if missing("artifact", (r.md5hash.to_hex(), r.name.clone(), r.created_date.to_string()))? {
                Index::insert_artifact(&tx, r)?;
            }
        }
        for t in tags {
            if missing("tag", (t.artifact.to_hex(), t.tag.clone(), t.created_date.to_string()))? {
                Index::insert_tag(&tx, t)?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    /// Consistency check between the index and the gallery. Report only.
    pub fn check_integrity(&self) -> Result<IntegrityReport> {
        let mut report = IntegrityReport::default();
        let mut files: BTreeMap<Md5Hash, BTreeSet<String>> = BTreeMap::new();
        for entry in fs::read_dir(self.gallery_dir())? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            match parse_gallery_name(&name) {
                Some((h, ext)) if entry.file_type()?.is_file() => {
                    files.entry(h).or_default().insert(ext.to_string());
                }
                _ => report.stray_files.push(name),
            }
        }

        let mut known = BTreeSet::new();
        for (h, name, date) in self.index.raw_artifact_rows()? {
            match (h.parse::<Md5Hash>(), date.parse::<Timestamp>()) {
                (Ok(hash), Ok(_)) => {
                    known.insert(hash);
                }
                _ => report.malformed_rows.push(RawRow {
                    artifact: h,
                    value: name,
                    created_date: date,
                }),
            }
        }

        let mut declared: BTreeMap<Md5Hash, BTreeSet<String>> = BTreeMap::new();
        for (h, tag, date) in self.index.raw_tag_rows()? {
            let raw = RawRow {
                artifact: h.clone(),
                value: tag.clone(),
                created_date: date.clone(),
            };
            let Ok(hash) = h.parse::<Md5Hash>() else {
                report.malformed_tags.push(raw);
                continue;
            };
            if split_tag(&tag).is_none() || date.parse::<Timestamp>().is_err() {
                report.malformed_tags.push(raw);
                continue;
            }
            if !known.contains(&hash) {
                report.orphan_tags.push(raw);
                continue;
            }
            if let Some((keys::FORMAT, fmt)) = split_tag(&tag) {
                declared.entry(hash).or_default().insert(fmt.to_string());
            }
        }

        for (hash, exts) in &files {
            if !known.contains(hash) {
                report
                    .orphan_files
                    .extend(exts.iter().map(|e| gallery_file_name(hash, e)));
            }
        }
        for hash in &known {
            let present = files.get(hash);
            let missing: Vec<&String> = declared
                .get(hash)
                .into_iter()
                .flatten()
                .filter(|ext| !present.is_some_and(|p| p.contains(*ext)))
                .collect();
            if present.is_none() || !missing.is_empty() {
                report.dangling_rows.push(*hash);
                report
                    .missing_files
                    .extend(missing.into_iter().map(|e| gallery_file_name(hash, e)));
            }
        }
        Ok(report)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RawRow {
    pub artifact: String,
    pub value: String,
    pub created_date: String,
}

/// Findings of [`Repository::check_integrity`]; empty means consistent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IntegrityReport {
    /// Gallery files whose hash has no artifact row.
    pub orphan_files: Vec<String>,
    /// Gallery entries not named `<hash>.<ext>`.
    pub stray_files: Vec<String>,
    /// Artifact rows with no gallery file or a missing declared format.
    pub dangling_rows: Vec<Md5Hash>,
    /// The declared files that are missing.
    pub missing_files: Vec<String>,
    /// Tag rows pointing at hashes with no artifact row.
    pub orphan_tags: Vec<RawRow>,
    /// Tag rows that are not `key:value` or carry a bad hash or timestamp.
    pub malformed_tags: Vec<RawRow>,
    /// Artifact rows carrying a bad hash or timestamp.
    pub malformed_rows: Vec<RawRow>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.orphan_files.is_empty()
            && self.stray_files.is_empty()
            && self.dangling_rows.is_empty()
            && self.missing_files.is_empty()
            && self.orphan_tags.is_empty()
            && self.malformed_tags.is_empty()
            && self.malformed_rows.is_empty()
    }
}
