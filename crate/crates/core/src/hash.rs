//! MD5 artifact identities.
//!
//! An artifact is identified by the MD5 digest of its canonical primary-format
//! bytes, written as 32 lowercase hex characters. MD5 is kept for its
//! compatibility with existing hook strings; it is not collision resistant.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use md5::{Digest, Md5};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const HEX: &[u8; 16] = b"0123456789abcdef";

/// MD5 digest of an artifact's canonical bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Md5Hash([u8; 16]);

impl Md5Hash {
    pub const fn from_digest(bytes: [u8; 16]) -> Self {
        Md5Hash(bytes)
    }

    pub fn digest_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(32);
        for b in self.0 {
            out.push(HEX[(b >> 4) as usize] as char);
            out.push(HEX[(b & 0x0f) as usize] as char);
        }
        out
    }

    /// True when the hex form of this hash starts with `prefix`.
    pub fn has_prefix(&self, prefix: &HashPrefix) -> bool {
        self.to_hex().starts_with(prefix.as_str())
    }
}

/// Digest of `bytes`.
pub fn compute_hash(bytes: &[u8]) -> Md5Hash {
    let digest = Md5::digest(bytes);
    let mut out = [0u8; 16];
    out.copy_from_slice(&digest);
    Md5Hash(out)
}

fn hex_value(c: u8) -> Option<u8> {
    match c {
        b'0'..=b'9' => Some(c - b'0'),
        b'a'..=b'f' => Some(c - b'a' + 10),
        _ => None,
    }
}

impl FromStr for Md5Hash {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        if bytes.len() != 32 {
            return Err(Error::MalformedHash(s.into()));
        }
        let mut out = [0u8; 16];
        for (i, pair) in bytes.chunks_exact(2).enumerate() {
            match (hex_value(pair[0]), hex_value(pair[1])) {
                (Some(hi), Some(lo)) => out[i] = (hi << 4) | lo,
                _ => return Err(Error::MalformedHash(s.into())),
            }
        }
        Ok(Md5Hash(out))
    }
}

impl fmt::Display for Md5Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Md5Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Md5Hash({})", self.to_hex())
    }
}

impl Serialize for Md5Hash {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Md5Hash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Leading hex characters of a hash, used for short lookups.
///
/// Input is normalized to lowercase.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct HashPrefix(String);

impl HashPrefix {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_full(&self) -> bool {
        self.0.len() == 32
    }
}

impl FromStr for HashPrefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 32 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::MalformedPrefix(s.into()));
        }
        Ok(HashPrefix(s.to_ascii_lowercase()))
    }
}

impl From<Md5Hash> for HashPrefix {
    fn from(hash: Md5Hash) -> Self {
        HashPrefix(hash.to_hex())
    }
}

impl fmt::Display for HashPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
