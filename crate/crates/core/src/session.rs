//! Session manifests and lockfile emission.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_json;
use crate::envelope::{ArtifactEnvelope, GenericPayload, Payload};
use crate::error::{Error, Result};

pub const MANIFEST_NAME: &str = "session_info";
pub const MANIFEST_CLASS: &str = "session_info";
pub const LOCKFILE_HEADER: &str = "# arcvault-lock v1";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentVersion {
    pub version: String,
    #[serde(default)]
    pub date: String,
    #[serde(default)]
    pub source: String,
}

/// Environment that produced an artifact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionManifest {
    pub tool_name: String,
    pub tool_version: String,
    pub platform: String,
    pub components: BTreeMap<String, ComponentVersion>,
}

pub trait EnvironmentProbe {
    fn tool_name(&self) -> String;
    fn tool_version(&self) -> String;
    fn platform(&self) -> String;
    fn components(&self) -> Vec<(String, ComponentVersion)>;
}

pub fn capture_session_manifest(probe: &dyn EnvironmentProbe) -> SessionManifest {
    SessionManifest {
        tool_name: probe.tool_name(),
        tool_version: probe.tool_version(),
        platform: probe.platform(),
        components: probe.components().into_iter().collect(),
    }
}

impl SessionManifest {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        to_canonical_json(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::MalformedManifest(e.to_string()))
    }

    /// The manifest as a generic JSON artifact.
    pub fn to_envelope(&self) -> Result<ArtifactEnvelope> {
        let payload = GenericPayload {
            bytes: self.to_bytes()?,
            format: "json".into(),
        };
        Ok(ArtifactEnvelope::new(MANIFEST_NAME, Payload::Generic(payload)))
    }

    /// `name==version  # source` lines under a version header.
    pub fn render_lockfile(&self) -> String {
        let mut out = format!("{LOCKFILE_HEADER}\n");
        for (name, c) in &self.components {
            out.push_str(name);
            out.push_str("==");
            out.push_str(&c.version);
            if !c.source.is_empty() {
                out.push_str("  # ");
                out.push_str(&c.source);
            }
            out.push('\n');
        }
        out
    }
}
