//! Tags and index rows.
//!
//! Every piece of metadata is a `key:value` string. The key ends at the first
//! colon, so values may themselves contain colons (timestamps do).

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::Md5Hash;
use crate::time::Timestamp;

/// Well-known tag keys.
pub mod keys {
    pub const NAME: &str = "name";
    pub const CLASS: &str = "class";
    pub const DATE: &str = "date";
    pub const FORMAT: &str = "format";
    pub const VARNAME: &str = "varname";
    pub const COEFNAME: &str = "coefname";
    pub const RANK: &str = "rank";
    pub const DF_RESIDUAL: &str = "df.residual";
    pub const LABELX: &str = "labelx";
    pub const LABELY: &str = "labely";
    pub const RELATION_WITH: &str = "relationWith";
    pub const SESSION_INFO: &str = "session_info";
    pub const CALL: &str = "call";
    pub const SOURCE: &str = "source";
}

/// A validated `key:value` string.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Tag(String);

impl Tag {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        match text.find(':') {
            Some(i) if i > 0 => Ok(Tag(text)),
            _ => Err(Error::MalformedTag(text)),
        }
    }

    pub fn from_parts(key: &str, value: impl fmt::Display) -> Self {
        debug_assert!(!key.is_empty() && !key.contains(':'));
        Tag(format!("{key}:{value}"))
    }

    pub fn key(&self) -> &str {
        split_tag(&self.0).map(|(k, _)| k).unwrap_or_default()
    }

    pub fn value(&self) -> &str {
        split_tag(&self.0).map(|(_, v)| v).unwrap_or_default()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

/// Splits raw tag text at its first colon.
pub fn split_tag(text: &str) -> Option<(&str, &str)> {
    match text.split_once(':') {
        Some((k, v)) if !k.is_empty() => Some((k, v)),
        _ => None,
    }
}

impl FromStr for Tag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Tag::new(s)
    }
}

impl TryFrom<String> for Tag {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Tag::new(s)
    }
}

impl From<Tag> for String {
    fn from(tag: Tag) -> String {
        tag.0
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One row of the `tag` table.
///
/// The tag text is kept raw so that malformed rows written by other tools can
/// still be read and reported.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct TagRecord {
    pub artifact: Md5Hash,
    pub tag: String,
    #[serde(rename = "createdDate")]
    pub created_date: Timestamp,
}

impl TagRecord {
    pub fn new(artifact: Md5Hash, tag: &Tag, created_date: Timestamp) -> Self {
        TagRecord {
            artifact,
            tag: tag.as_str().into(),
            created_date,
        }
    }

    pub fn key(&self) -> Option<&str> {
        split_tag(&self.tag).map(|(k, _)| k)
    }

    pub fn value(&self) -> Option<&str> {
        split_tag(&self.tag).map(|(_, v)| v)
    }

    /// Value of this record when its key is `key`.
    pub fn value_of(&self, key: &str) -> Option<&str> {
        match split_tag(&self.tag) {
            Some((k, v)) if k == key => Some(v),
            _ => None,
        }
    }
}

/// One row of the `artifact` table; a new row is written per save attempt.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct ArtifactRow {
    pub md5hash: Md5Hash,
    pub name: String,
    #[serde(rename = "createdDate")]
    pub created_date: Timestamp,
}
