use std::collections::{BTreeMap, BTreeSet};

use arcvault_core::search::{combine, sort_by_values};
use arcvault_core::time::parse_date;
use arcvault_core::{Md5Hash, SearchPattern, Timestamp};
use chrono::NaiveDate;

use crate::artifacts::LoadedArtifact;
use crate::error::{Error, Result};
use crate::repo::Repository;

impl Repository {
    /// Hashes matching one pattern.
    pub fn matching(&self, pattern: &SearchPattern) -> Result<BTreeSet<Md5Hash>> {
        match pattern {
            SearchPattern::Tag(tag) => self.index.hashes_with_tag(tag.as_str()),
            SearchPattern::KeyPrefix(key) => self.index.hashes_with_key(key),
            SearchPattern::DateRange { from, to } => {
                let low = format!("date:{}", Timestamp::start_of(*from));
                let high = format!("date:{}", Timestamp::end_of(*to));
                Ok(self
                    .index
                    .tags_between(&low, &high)?
                    .into_iter()
                    .filter(|(_, tag)| pattern.matches_tag(tag))
                    .map(|(h, _)| h)
                    .collect())
            }
        }
    }

    /// Intersection (`intersect`) or union of the pattern matches, sorted by
    /// hash.
    pub fn search(&self, patterns: &[SearchPattern], intersect: bool) -> Result<Vec<Md5Hash>> {
        if patterns.is_empty() {
            return Err(Error::EmptyQuery);
        }
        let sets = patterns
            .iter()
            .map(|p| self.matching(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(combine(sets, intersect))
    }

    /// Loads every artifact matching all patterns.
    pub fn asearch(&self, patterns: &[SearchPattern]) -> Result<BTreeMap<Md5Hash, LoadedArtifact>> {
        self.search(patterns, true)?
            .into_iter()
            .map(|h| Ok((h, self.load_hash(&h)?)))
            .collect()
    }
}

// Four-digit years keep `date:` tags in lexicographic order.
fn earliest() -> NaiveDate {
    NaiveDate::from_ymd_opt(0, 1, 1).expect("valid date")
}

fn latest() -> NaiveDate {
    NaiveDate::from_ymd_opt(9999, 12, 31).expect("valid date")
}

/// Patterns from tag texts and an optional date window. A missing bound is
/// open on that side.
pub fn build_patterns(tags: &[String], from: Option<&str>, to: Option<&str>) -> Result<Vec<SearchPattern>> {
    let mut patterns = tags
        .iter()
        .map(|t| SearchPattern::parse(t))
        .collect::<Result<Vec<_>, _>>()?;
    if from.is_some() || to.is_some() {
        let from = from.map(parse_date).transpose()?.unwrap_or(earliest());
        let to = to.map(parse_date).transpose()?.unwrap_or(latest());
        patterns.push(SearchPattern::date_range(from, to)?);
    }
    Ok(patterns)
}

/// Sort key of one artifact: the first value of tag `key`, or for
/// `createdDate` its earliest save time.
pub fn sort_value(repo: &Repository, hash: &Md5Hash, key: &str) -> Result<Option<String>> {
    if key == "createdDate" {
        return Ok(repo
            .artifact_rows_of(hash)?
            .iter()
            .map(|r| r.created_date)
            .min()
            .map(|d| d.to_string()));
    }
    Ok(repo
        .tags_of(hash)?
        .iter()
        .find_map(|t| t.value_of(key))
        .map(String::from))
}

/// Reorders hashes by tag values; see [`sort_by_values`].
pub fn sort_hashes(repo: &Repository, hashes: Vec<Md5Hash>, key: &str) -> Result<Vec<Md5Hash>> {
    let mut keyed = hashes
        .into_iter()
        .map(|h| Ok((h, sort_value(repo, &h, key)?)))
        .collect::<Result<Vec<_>>>()?;
    sort_by_values(&mut keyed);
    Ok(keyed.into_iter().map(|(h, _)| h).collect())
}
