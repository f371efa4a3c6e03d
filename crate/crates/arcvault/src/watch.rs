//! Directory watcher that archives new or changed files.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, SystemTime};

use arcvault_core::{
    compute_hash, ArtifactEnvelope, ArtifactKind, DatasetPayload, GenericPayload, LinearModelPayload, Md5Hash,
    Payload, PlotSpecPayload,
};
use glob::Pattern;
use log::{info, warn};

use crate::artifacts::SaveOptions;
use crate::error::{Error, Result};
use crate::repo::Repository;

pub const WATCH_TAG: &str = "source:watch";

/// Maps file names matching `pattern` to `kind`.
#[derive(Clone, Debug)]
pub struct KindRule {
    pub pattern: Pattern,
    pub kind: ArtifactKind,
}

impl KindRule {
    /// Parses `glob=kind`, e.g. `*.csv=dataset`.
    pub fn parse(text: &str) -> Result<KindRule> {
        let bad = || Error::Config(format!("expected glob=kind, got `{text}`"));
        let (glob, kind) = text.rsplit_once('=').ok_or_else(bad)?;
        Ok(KindRule {
            pattern: Pattern::new(glob).map_err(|e| Error::Config(format!("{glob}: {e}")))?,
            kind: kind.parse()?,
        })
    }
}

/// Rules used when none are given; the first match wins.
pub fn default_rules() -> Vec<KindRule> {
    ["*.csv=dataset", "*.plot.json=plot-spec", "*.json=linear-model"]
        .iter()
        .map(|r| KindRule::parse(r).expect("static rule"))
        .collect()
}

fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    match name.split_once('.') {
        Some((s, _)) if !s.is_empty() => s.to_string(),
        _ => name,
    }
}

/// Wraps raw file bytes in an envelope of `kind`, named after the file.
pub fn envelope_from_bytes(path: &Path, kind: ArtifactKind, bytes: Vec<u8>) -> Result<ArtifactEnvelope> {
    let invalid = |e: serde_json::Error| arcvault_core::Error::InvalidPayload(e.to_string());
    let payload = match kind {
        ArtifactKind::Dataset => Payload::Dataset(DatasetPayload::from_csv(&bytes)?),
        ArtifactKind::LinearModel => {
            Payload::LinearModel(serde_json::from_slice::<LinearModelPayload>(&bytes).map_err(invalid)?)
        }
        ArtifactKind::PlotSpec => {
            Payload::PlotSpec(serde_json::from_slice::<PlotSpecPayload>(&bytes).map_err(invalid)?)
        }
        ArtifactKind::Generic => {
            let ext = path
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase())
                .unwrap_or_default();
            let mut payload = GenericPayload::new(bytes);
            let candidate = GenericPayload {
                bytes: Vec::new(),
                format: ext.clone(),
            };
            if candidate.validate().is_ok() {
                payload.format = ext;
            }
            Payload::Generic(payload)
        }
    };
    let envelope = ArtifactEnvelope::new(stem(path), payload);
    envelope.validate()?;
    Ok(envelope)
}

pub fn envelope_from_file(path: &Path, kind: ArtifactKind) -> Result<ArtifactEnvelope> {
    envelope_from_bytes(path, kind, fs::read(path)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WatchEvent {
    pub path: PathBuf,
    pub md5hash: Md5Hash,
}

/// Polling watcher over one directory (not recursive).
pub struct Watcher {
    dir: PathBuf,
    rules: Vec<KindRule>,
    seen: HashMap<PathBuf, (Option<SystemTime>, Md5Hash)>,
}

impl Watcher {
    pub fn new(dir: impl Into<PathBuf>, rules: Vec<KindRule>) -> Result<Watcher> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(Error::NotFound(format!("directory {}", dir.display())));
        }
        Ok(Watcher {
            dir,
            rules,
            seen: HashMap::new(),
        })
    }

    fn kind_for(&self, name: &str) -> Option<ArtifactKind> {
        self.rules.iter().find(|r| r.pattern.matches(name)).map(|r| r.kind)
    }

    /// Archives every matching file that is new or changed since the last
    /// scan. Files that cannot be read or parsed are logged and skipped.
    pub fn scan(&mut self, repo: &mut Repository) -> Result<Vec<WatchEvent>> {
        let mut paths: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_ok_and(|t| t.is_file()))
            .map(|e| e.path())
            .collect();
        paths.sort();
        let mut events = Vec::new();
        for path in paths {
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if name.starts_with('.') {
                continue;
            }
            let Some(kind) = self.kind_for(&name) else {
                continue;
            };
            let mtime = fs::metadata(&path).and_then(|m| m.modified()).ok();
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) => {
                    warn!("skipping {}: {e}", path.display());
                    continue;
                }
            };
            let digest = compute_hash(&bytes);
            if self.seen.get(&path) == Some(&(mtime, digest)) {
                continue;
            }
            self.seen.insert(path.clone(), (mtime, digest));
            let saved = envelope_from_bytes(&path, kind, bytes)
                .and_then(|env| repo.save(&env, &SaveOptions::default().tag(WATCH_TAG)));
            match saved {
                Ok(outcome) => {
                    info!("archived {} as {}", path.display(), outcome.md5hash);
                    events.push(WatchEvent {
                        path,
                        md5hash: outcome.md5hash,
                    });
                }
                Err(e) => warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(events)
    }

    /// Scans every `interval` until `stop` is set.
    pub fn run(&mut self, repo: &mut Repository, interval: Duration, stop: &AtomicBool) -> Result<()> {
        while !stop.load(Ordering::Relaxed) {
            self.scan(repo)?;
            thread::sleep(interval);
        }
        Ok(())
    }
}
