//! Compact artifact addresses and hook strings.
//!
//! An address is `segment/segment/.../<hash-prefix>`. The segments name a
//! remote repository (`user/repo[/subdir...]` on the default host) or, when
//! the text starts with a URL scheme, a verbatim base URL. With no segments
//! the default repository is meant.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::hash::HashPrefix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AddressBase {
    Default,
    Segments(Vec<String>),
    Url(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Address {
    pub base: AddressBase,
    pub hash_prefix: HashPrefix,
}

impl Address {
    pub fn new(base: AddressBase, hash_prefix: HashPrefix) -> Self {
        Address { base, hash_prefix }
    }
}

pub fn parse_address(text: &str) -> Result<Address> {
    let text = text.trim();
    let malformed = || Error::MalformedAddress(text.into());
    if text.is_empty() {
        return Err(malformed());
    }
    let (base, last) = match text.rsplit_once('/') {
        None => (None, text),
        Some((base, last)) => (Some(base), last),
    };
    let hash_prefix: HashPrefix = last.parse().map_err(|_| malformed())?;
    let base = match base {
        None => AddressBase::Default,
        Some(b) if b.contains("://") => {
            let (_, rest) = b.split_once("://").ok_or_else(malformed)?;
            if rest.is_empty() {
                return Err(malformed());
            }
            AddressBase::Url(b.into())
        }
        Some(b) => {
            let segments: Vec<String> = b.split('/').map(String::from).collect();
            if segments.iter().any(|s| s.is_empty()) {
                return Err(malformed());
            }
            AddressBase::Segments(segments)
        }
    };
    Ok(Address { base, hash_prefix })
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            AddressBase::Default => write!(f, "{}", self.hash_prefix),
            AddressBase::Segments(s) => write!(f, "{}/{}", s.join("/"), self.hash_prefix),
            AddressBase::Url(u) => write!(f, "{}/{}", u.trim_end_matches('/'), self.hash_prefix),
        }
    }
}

/// One-line instruction that retrieves an artifact, plus an optional direct
/// link to its blob.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hook {
    pub address: Address,
    pub url: Option<String>,
}

impl Hook {
    pub const COMMAND: &'static str = "arcvault read";

    pub fn text(&self) -> String {
        format!("{} {}", Self::COMMAND, self.address)
    }

    /// Recovers the address from hook text (with or without the command).
    pub fn parse_text(text: &str) -> Result<Address> {
        let rest = text.trim().strip_prefix(Self::COMMAND).unwrap_or(text);
        parse_address(rest)
    }
}

impl fmt::Display for Hook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}
