//! Per-user CLI configuration, stored as JSON.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use arcvault_core::session::ComponentVersion;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::locator::{Defaults, RepoLocator};
use crate::remote::{parse_remote_spec, RemoteLocator};

pub const CONFIG_ENV: &str = "ARCVAULT_CONFIG";
pub const REPO_ENV: &str = "ARCVAULT_REPO";

pub const OPT_CACHE_TTL: &str = "cacheTtlSeconds";
pub const OPT_CACHE_DIR: &str = "cacheDir";
pub const OPT_LOCK_TIMEOUT: &str = "lockTimeoutSeconds";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CliConfig {
    pub default_local_repo: Option<PathBuf>,
    /// Remote spec as accepted by [`parse_remote_spec`].
    pub default_remote: Option<String>,
    pub options: BTreeMap<String, Value>,
    /// Components recorded in session manifests.
    pub components: BTreeMap<String, ComponentVersion>,
}

/// `$ARCVAULT_CONFIG`, else `<config dir>/arcvault/config.json`.
pub fn config_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(CONFIG_ENV) {
        return Some(PathBuf::from(p));
    }
    dirs::config_dir().map(|d| d.join("arcvault").join("config.json"))
}

impl CliConfig {
    /// Reads the config; a missing file means everything unset.
    pub fn load(path: &Path) -> Result<CliConfig> {
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(CliConfig::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        fs::write(path, bytes)?;
        Ok(())
    }

    fn seconds(&self, key: &str) -> Result<Option<Duration>> {
        match self.options.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .map(|s| Some(Duration::from_secs(s)))
                .ok_or_else(|| Error::Config(format!("option {key} must be a non-negative integer"))),
        }
    }

    pub fn cache_ttl(&self) -> Result<Option<Duration>> {
        self.seconds(OPT_CACHE_TTL)
    }

    pub fn lock_timeout(&self) -> Result<Option<Duration>> {
        self.seconds(OPT_LOCK_TIMEOUT)
    }

    pub fn cache_dir(&self) -> Result<Option<PathBuf>> {
        match self.options.get(OPT_CACHE_DIR) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(PathBuf::from(s))),
            Some(_) => Err(Error::Config(format!("option {OPT_CACHE_DIR} must be a string"))),
        }
    }

    /// Builds a remote locator honouring the cache options.
    pub fn remote_locator(&self, spec: &str) -> Result<RemoteLocator> {
        let template = parse_remote_spec(spec)?;
        let mut locator = match self.cache_dir()? {
            Some(root) => RemoteLocator::cached_under(template, &root),
            None => RemoteLocator::new(template),
        };
        if let Some(ttl) = self.cache_ttl()? {
            locator = locator.with_ttl(ttl);
        }
        Ok(locator)
    }

    /// Defaults from this config, with explicit overrides applied.
    pub fn defaults(&self, repo: Option<&Path>, remote: Option<&str>) -> Result<Defaults> {
        let mut d = Defaults {
            cache_root: self.cache_dir()?,
            ..Defaults::default()
        };
        if let Some(p) = repo.map(Path::to_path_buf).or_else(|| self.default_local_repo.clone()) {
            d.set(RepoLocator::Local(p))?;
        }
        if let Some(spec) = remote.or(self.default_remote.as_deref()) {
            d.set(RepoLocator::Remote(self.remote_locator(spec)?))?;
        }
        Ok(d)
    }

    /// Parses `key=value`, reading the value as JSON when it parses.
    pub fn set_option(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .filter(|(k, _)| !k.is_empty())
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{assignment}`")))?;
        let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.into()));
        self.options.insert(key.into(), value);
        Ok(())
    }
}
