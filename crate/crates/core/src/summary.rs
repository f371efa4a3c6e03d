use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

/// Aggregate statistics for a repository.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepoSummary {
    /// Distinct artifact hashes.
    pub artifact_count: u64,
    /// Distinct artifacts tagged `class:dataset`.
    pub dataset_count: u64,
    /// Distinct artifacts per `class:` value; multi-class artifacts count once per class.
    pub counts_by_class: BTreeMap<String, u64>,
    /// Save events (`date:` tags) per calendar day, keyed `YYYY-MM-DD`.
    pub saves_per_day: BTreeMap<String, u64>,
}

impl RepoSummary {
    pub fn total_saves(&self) -> u64 {
        self.saves_per_day.values().sum()
    }
}
