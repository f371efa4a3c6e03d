//! Search patterns and result-set algebra.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::hash::Md5Hash;
use crate::tag::{split_tag, Tag};
use crate::time::{parse_date, Timestamp};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchPattern {
    /// Exact `key:value` match.
    Tag(Tag),
    /// Any tag with this key (`key:*`). Interactive-search extension.
    KeyPrefix(String),
    /// Artifacts whose `date:` tag falls between the two days, inclusive.
    DateRange { from: NaiveDate, to: NaiveDate },
}

impl SearchPattern {
    /// Parses `key:value`, or `key:*` for a key wildcard.
    pub fn parse(text: &str) -> Result<Self> {
        let tag = Tag::new(text)?;
        if tag.value() == "*" {
            return Ok(SearchPattern::KeyPrefix(tag.key().into()));
        }
        Ok(SearchPattern::Tag(tag))
    }

    pub fn date_range(from: NaiveDate, to: NaiveDate) -> Result<Self> {
        if from > to {
            return Err(Error::InvalidDateRange {
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        Ok(SearchPattern::DateRange { from, to })
    }

    pub fn parse_date_range(from: &str, to: &str) -> Result<Self> {
        Self::date_range(parse_date(from)?, parse_date(to)?)
    }

    /// True when the raw tag text satisfies this pattern.
    pub fn matches_tag(&self, tag: &str) -> bool {
        match self {
            SearchPattern::Tag(t) => t.as_str() == tag,
            SearchPattern::KeyPrefix(key) => split_tag(tag).is_some_and(|(k, _)| k == key),
            SearchPattern::DateRange { from, to } => match split_tag(tag) {
                Some(("date", value)) => value
                    .parse::<Timestamp>()
                    .is_ok_and(|ts| ts >= Timestamp::start_of(*from) && ts <= Timestamp::end_of(*to)),
                _ => false,
            },
        }
    }
}

/// Intersection (`intersect`) or union of per-pattern hit sets, sorted.
pub fn combine(sets: Vec<BTreeSet<Md5Hash>>, intersect: bool) -> Vec<Md5Hash> {
    let mut iter = sets.into_iter();
    let Some(first) = iter.next() else {
        return Vec::new();
    };
    let merged = iter.fold(first, |acc, set| {
        if intersect {
            acc.intersection(&set).copied().collect()
        } else {
            acc.union(&set).copied().collect()
        }
    });
    merged.into_iter().collect()
}

/// Orders `items` by their sort values. Values compare numerically when
/// every present value parses as a number, otherwise as strings; items
/// without a value go last. Ties keep their input order.
pub fn sort_by_values<T>(items: &mut [(T, Option<String>)]) {
    let numeric = items
        .iter()
        .filter_map(|(_, v)| v.as_deref())
        .all(|v| v.trim().parse::<f64>().is_ok());
    items.sort_by(|(_, a), (_, b)| match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(a), Some(b)) if numeric => {
            let x: f64 = a.trim().parse().unwrap_or(f64::NAN);
            let y: f64 = b.trim().parse().unwrap_or(f64::NAN);
            x.partial_cmp(&y).unwrap_or(Ordering::Equal)
        }
        (Some(a), Some(b)) => a.cmp(b),
    });
}
