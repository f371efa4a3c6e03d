//! Read-only HTTP remotes, copying between repositories, zip archives.

use std::collections::{BTreeSet, VecDeque};
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime};

use arcvault_core::tag::keys;
use arcvault_core::{compute_hash, HostProfile, Md5Hash, RemoteTemplate};
use log::debug;
use serde::Serialize;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::error::{Error, Result};
use crate::index::{Index, INDEX_FILE};
use crate::repo::{commit_temp, parse_gallery_name, write_temp, Repository, GALLERY_DIR};

pub const DEFAULT_CACHE_TTL: Duration = Duration::from_secs(300);
pub const CACHE_ENV: &str = "ARCVAULT_CACHE";

/// A remote repository: a URL template and a local cache for its files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemoteLocator {
    pub template: RemoteTemplate,
    pub cache_dir: PathBuf,
    pub cache_ttl: Duration,
}

fn default_cache_root() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(dir);
    }
    dirs::cache_dir()
        .unwrap_or_else(std::env::temp_dir)
        .join("arcvault")
}

impl RemoteLocator {
    /// Locator with the default cache directory and TTL.
    pub fn new(template: RemoteTemplate) -> Self {
        Self::cached_under(template, &default_cache_root())
    }

    /// Locator caching in a per-template subdirectory of `root`.
    pub fn cached_under(template: RemoteTemplate, root: &Path) -> Self {
        let key = serde_json::to_vec(&template).unwrap_or_default();
        let cache_dir = root.join(compute_hash(&key).to_hex());
        RemoteLocator {
            template,
            cache_dir,
            cache_ttl: DEFAULT_CACHE_TTL,
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = dir.into();
        self
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.cache_ttl = ttl;
        self
    }

    /// URL of a repository-relative path. No network access.
    pub fn remote_hook(&self, relpath: &str) -> Result<String> {
        Ok(self.template.url_for(relpath)?)
    }

    /// GETs a repository-relative path.
    pub fn fetch(&self, relpath: &str) -> Result<Vec<u8>> {
        let url = self.remote_hook(relpath)?;
        http_get(&url)
    }

    /// Drops the cached index so the next fetch downloads it again.
    pub fn invalidate_cache(&self) -> Result<()> {
        match fs::remove_file(self.cache_dir.join(INDEX_FILE)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    fn cache_is_fresh(&self) -> bool {
        let Ok(meta) = fs::metadata(self.cache_dir.join(INDEX_FILE)) else {
            return false;
        };
        let age = meta
            .modified()
            .ok()
            .and_then(|m| SystemTime::now().duration_since(m).ok())
            .unwrap_or(Duration::ZERO);
        age < self.cache_ttl
    }

    /// Opens a read-only view, downloading the index unless the cached copy
    /// is younger than the TTL.
    pub fn fetch_remote_index(&self) -> Result<Repository> {
        fs::create_dir_all(self.cache_dir.join(GALLERY_DIR))?;
        let dest = self.cache_dir.join(INDEX_FILE);
        if !self.cache_is_fresh() {
            let bytes = self.fetch(INDEX_FILE)?;
            let staging = write_temp(&self.cache_dir, &bytes)?;
            let valid = Index::open(&staging, true).and_then(|i| i.has_schema()).unwrap_or(false);
            if !valid {
                let _ = fs::remove_file(&staging);
                return Err(Error::CorruptRemoteIndex(self.remote_hook(INDEX_FILE)?));
            }
            commit_temp(&staging, &dest)?;
            debug!("refreshed remote index cache {}", dest.display());
        }
        Repository::open_remote_view(&self.cache_dir, self.clone())
    }
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(60)))
        .build()
        .into()
}

/// The only network primitive: a GET. Non-200 responses are errors.
fn http_get(url: &str) -> Result<Vec<u8>> {
    let unavailable = |status: Option<u16>, reason: String| Error::RemoteUnavailable {
        url: url.to_string(),
        status,
        reason,
    };
    let mut resp = agent()
        .get(url)
        .call()
        .map_err(|e| unavailable(None, e.to_string()))?;
    let status = resp.status().as_u16();
    if status != 200 {
        return Err(unavailable(Some(status), "unexpected status".into()));
    }
    resp.body_mut()
        .with_config()
        .limit(u64::MAX)
        .read_to_vec()
        .map_err(|e| unavailable(Some(status), e.to_string()))
}

/// Parses `github:user/repo[/subdir][@branch]`, `bitbucket:...`, a bare
/// `user/repo[/subdir][@branch]` (GitHub), or an `http(s)://` base URL.
pub fn parse_remote_spec(spec: &str) -> Result<RemoteTemplate> {
    let bad = || Error::Config(format!("unrecognised remote `{spec}`"));
    if spec.starts_with("http://") || spec.starts_with("https://") {
        return Ok(RemoteTemplate::raw_url(spec.trim_end_matches('/')));
    }
    let (profile, rest) = match spec.split_once(':') {
        Some(("github", rest)) => (HostProfile::Github, rest),
        Some(("bitbucket", rest)) => (HostProfile::Bitbucket, rest),
        Some(_) => return Err(bad()),
        None => (HostProfile::Github, spec),
    };
    let (path, branch) = match rest.split_once('@') {
        Some((p, b)) if !b.is_empty() => (p, b),
        Some(_) => return Err(bad()),
        None => (rest, arcvault_core::template::DEFAULT_BRANCH),
    };
    let segments: Vec<&str> = path.split('/').collect();
    if segments.len() < 2 || segments.iter().any(|s| s.is_empty()) {
        return Err(bad());
    }
    let subdir = segments[2..].join("/");
    Ok(match profile {
        HostProfile::Bitbucket => RemoteTemplate::bitbucket(segments[0], segments[1], branch, &subdir),
        _ => RemoteTemplate::github(segments[0], segments[1], branch, &subdir),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CopyReport {
    /// Requested hashes that were copied.
    pub copied: Vec<Md5Hash>,
    /// Session manifests copied along with them.
    pub sessions: Vec<Md5Hash>,
    /// Requested hashes absent from the source.
    pub missing: Vec<Md5Hash>,
}

/// Files of `hash` as named by its `format:` tags.
fn files_of(repo: &Repository, hash: &Md5Hash) -> Result<Vec<(String, Vec<u8>)>> {
    repo.formats_of(hash)?
        .into_iter()
        .map(|ext| Ok((format!("{hash}.{ext}"), repo.blob(hash, &ext)?)))
        .collect()
}

/// Copies artifacts with all their tag rows and original dates, plus the
/// session manifests they link to.
pub fn copy_artifacts(from: &Repository, to: &mut Repository, hashes: &[Md5Hash]) -> Result<CopyReport> {
    let mut report = CopyReport::default();
    let mut queue: VecDeque<(Md5Hash, bool)> = hashes.iter().map(|h| (*h, true)).collect();
    let mut seen = BTreeSet::new();
    let (mut rows, mut tags, mut files) = (Vec::new(), Vec::new(), Vec::new());
    while let Some((hash, requested)) = queue.pop_front() {
        if !seen.insert(hash) {
            continue;
        }
        if !from.contains(&hash)? {
            if requested {
                report.missing.push(hash);
            }
            continue;
        }
        let t = from.tags_of(&hash)?;
        for link in t.iter().filter_map(|r| r.value_of(keys::SESSION_INFO)) {
            if let Ok(m) = link.parse() {
                queue.push_back((m, false));
            }
        }
        rows.extend(from.artifact_rows_of(&hash)?);
        tags.extend(t);
        files.extend(files_of(from, &hash)?);
        if requested {
            report.copied.push(hash);
        } else {
            report.sessions.push(hash);
        }
    }
    if !rows.is_empty() {
        to.import(&rows, &tags, &files)?;
    }
    Ok(report)
}

fn zip_options() -> SimpleFileOptions {
    SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644)
}

/// Writes `backpack.db` and the whole gallery into a zip archive. Remote
/// blobs are fetched as needed.
pub fn zip_repo(repo: &Repository, dest: &Path) -> Result<()> {
    let mut names = BTreeSet::new();
    for hash in repo.hashes()? {
        for ext in repo.formats_of(&hash)? {
            names.insert(format!("{hash}.{ext}"));
        }
    }
    if !repo.is_read_only() {
        for entry in fs::read_dir(repo.gallery_dir())? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if parse_gallery_name(&name).is_some() {
                names.insert(name);
            }
        }
    }

    let mut zip = ZipWriter::new(File::create(dest)?);
    zip.start_file(INDEX_FILE, zip_options())?;
    zip.write_all(&fs::read(repo.index_path())?)?;
    zip.add_directory(format!("{GALLERY_DIR}/"), zip_options().unix_permissions(0o755))?;
    for name in &names {
        let (hash, ext) = parse_gallery_name(name).expect("filtered above");
        let bytes = repo.blob(&hash, ext)?;
        zip.start_file(format!("{GALLERY_DIR}/{name}"), zip_options())?;
        zip.write_all(&bytes)?;
    }
    zip.finish()?.sync_all()?;
    Ok(())
}

/// Extracts an archive written by [`zip_repo`] into an empty or absent
/// directory and opens it.
pub fn unzip_repo(archive: &Path, dest: &Path) -> Result<Repository> {
    if dest.exists() && fs::read_dir(dest)?.next().is_some() {
        return Err(Error::RepoConflict {
            path: dest.to_path_buf(),
            reason: "destination is not empty".into(),
        });
    }
    fs::create_dir_all(dest.join(GALLERY_DIR))?;
    let mut zip = ZipArchive::new(File::open(archive)?)?;
    for i in 0..zip.len() {
        let mut entry = zip.by_index(i)?;
        let name = entry.name().to_string();
        let allowed = name == INDEX_FILE
            || name == format!("{GALLERY_DIR}/")
            || name
                .strip_prefix(&format!("{GALLERY_DIR}/"))
                .is_some_and(|f| parse_gallery_name(f).is_some());
        if !allowed {
            return Err(Error::RepoConflict {
                path: archive.to_path_buf(),
                reason: format!("unexpected archive entry {name}"),
            });
        }
        if entry.is_dir() {
            continue;
        }
        let mut bytes = Vec::new();
        entry.read_to_end(&mut bytes)?;
        fs::write(dest.join(&name), bytes)?;
    }
    Repository::open(dest)
}
