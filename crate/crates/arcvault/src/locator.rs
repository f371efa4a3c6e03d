//! Repository locators, process-level defaults and compact addresses.

use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard, OnceLock};

use arcvault_core::{parse_address, AddressBase, RemoteTemplate};

use crate::artifacts::LoadedArtifact;
use crate::error::{Error, Result};
use crate::remote::RemoteLocator;
use crate::repo::Repository;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RepoLocator {
    Local(PathBuf),
    Remote(RemoteLocator),
}

impl RepoLocator {
    pub fn local(path: impl Into<PathBuf>) -> Self {
        RepoLocator::Local(path.into())
    }

    pub fn remote(template: RemoteTemplate) -> Self {
        RepoLocator::Remote(RemoteLocator::new(template))
    }

    pub fn open(&self) -> Result<Repository> {
        match self {
            RepoLocator::Local(p) => Repository::open(p),
            RepoLocator::Remote(r) => r.fetch_remote_index(),
        }
    }
}

/// One default local and one default remote repository.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Defaults {
    pub local: Option<PathBuf>,
    pub remote: Option<RemoteLocator>,
    /// Cache root for remotes named by explicit addresses.
    pub cache_root: Option<PathBuf>,
}

impl Defaults {
    /// Sets the default of the locator's flavour. A local path must already
    /// be a repository; a remote is not contacted.
    pub fn set(&mut self, locator: RepoLocator) -> Result<()> {
        match locator {
            RepoLocator::Local(p) => {
                if !Repository::is_repository(&p) {
                    return Err(Error::NotARepo(p));
                }
                self.local = Some(p);
            }
            RepoLocator::Remote(r) => self.remote = Some(r),
        }
        Ok(())
    }

    /// The repository used by locator-less operations: the default local
    /// one, else the default remote.
    pub fn open(&self) -> Result<Repository> {
        if let Some(p) = &self.local {
            return Repository::open(p);
        }
        if let Some(r) = &self.remote {
            return r.fetch_remote_index();
        }
        Err(Error::NoDefaultRepo)
    }

    pub fn open_local(&self) -> Result<Repository> {
        self.local.as_deref().map_or(Err(Error::NoDefaultRepo), Repository::open)
    }

    /// Loads by compact address. An explicit base names a remote; a bare
    /// prefix tries the default local repository, then the default remote.
    pub fn aread(&self, address: &str) -> Result<Vec<LoadedArtifact>> {
        let address = parse_address(address)?;
        let prefix = &address.hash_prefix;
        match &address.base {
            AddressBase::Default => {
                if self.local.is_none() && self.remote.is_none() {
                    return Err(Error::NoDefaultRepo);
                }
                if let Some(p) = &self.local {
                    match Repository::open(p)?.load(prefix) {
                        Err(Error::NotFound(_)) if self.remote.is_some() => {}
                        other => return other,
                    }
                }
                let remote = self.remote.as_ref().expect("checked above");
                remote.fetch_remote_index()?.load(prefix)
            }
            base => {
                let template = RemoteTemplate::from_address_base(base)?;
                let remote = match &self.cache_root {
                    Some(root) => RemoteLocator::cached_under(template, root),
                    None => RemoteLocator::new(template),
                };
                remote.fetch_remote_index()?.load(prefix)
            }
        }
    }
}

fn global() -> MutexGuard<'static, Defaults> {
    static DEFAULTS: OnceLock<Mutex<Defaults>> = OnceLock::new();
    DEFAULTS
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|p| p.into_inner())
}

pub fn set_default_repo(locator: RepoLocator) -> Result<()> {
    global().set(locator)
}

pub fn clear_default_repos() {
    *global() = Defaults::default();
}

pub fn default_repos() -> Defaults {
    global().clone()
}

/// Opens the process default repository.
pub fn open_default_repo() -> Result<Repository> {
    default_repos().open()
}

pub fn aread(address: &str) -> Result<Vec<LoadedArtifact>> {
    default_repos().aread(address)
}

