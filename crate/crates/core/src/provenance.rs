//! Pedigree reconstruction from relation and call tags.
//!
//! A recorded pipeline step leaves two adjacent tags on its output, written
//! in the same save event: `relationWith:<input>` followed by
//! `call:<descriptor>`. A `relationWith:` tag without a `call:` right after
//! it is a data dependency (a dataset pointing at the artifact that uses it)
//! and does not extend a pedigree.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::hash::Md5Hash;
use crate::tag::{keys, TagRecord};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PedigreeEntry {
    pub call: String,
    pub md5hash: Md5Hash,
}

/// Calls and intermediate hashes leading to an artifact, root first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pedigree {
    pub steps: Vec<PedigreeEntry>,
}

impl Pedigree {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_hash(&self) -> Option<Md5Hash> {
        self.steps.last().map(|s| s.md5hash)
    }
}

/// Read access to the tags of one artifact, in insertion order.
pub trait TagLookup {
    type Error;
    fn tags_of(&self, hash: &Md5Hash) -> Result<Vec<TagRecord>, Self::Error>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistoryError<E> {
    #[error("provenance cycle through {0}")]
    Cyclic(Md5Hash),
    #[error(transparent)]
    Lookup(E),
}

/// The most recent recorded step that produced this artifact: its call
/// descriptor and, unless it was a root step, its input hash.
pub fn pipeline_step(tags: &[TagRecord]) -> Option<(String, Option<Md5Hash>)> {
    let i = tags.iter().rposition(|t| t.key() == Some(keys::CALL))?;
    let call = tags[i].value().unwrap_or_default().into();
    let input = i
        .checked_sub(1)
        .map(|j| &tags[j])
        .filter(|prev| prev.created_date == tags[i].created_date)
        .and_then(|prev| prev.value_of(keys::RELATION_WITH))
        .and_then(|v| v.parse().ok());
    Some((call, input))
}

/// Targets of `relationWith:` tags that are data dependencies rather than
/// pipeline inputs.
pub fn data_relations(tags: &[TagRecord]) -> Vec<Md5Hash> {
    tags.iter()
        .enumerate()
        .filter(|(i, t)| {
            t.key() == Some(keys::RELATION_WITH)
                && !tags
                    .get(i + 1)
                    .is_some_and(|next| next.key() == Some(keys::CALL) && next.created_date == t.created_date)
        })
        .filter_map(|(_, t)| t.value().and_then(|v| v.parse().ok()))
        .collect()
}

fn name_of(tags: &[TagRecord]) -> String {
    tags.iter()
        .find_map(|t| t.value_of(keys::NAME))
        .unwrap_or_default()
        .into()
}

/// Walks pipeline inputs back to the root.
///
/// An artifact with no recorded call is its own root, labelled by its name.
pub fn trace_pedigree<L: TagLookup>(lookup: &L, hash: Md5Hash) -> Result<Pedigree, HistoryError<L::Error>> {
    let mut steps = Vec::new();
    let mut visited = BTreeSet::new();
    let mut current = hash;
    loop {
        if !visited.insert(current) {
            return Err(HistoryError::Cyclic(current));
        }
        let tags = lookup.tags_of(&current).map_err(HistoryError::Lookup)?;
        match pipeline_step(&tags) {
            Some((call, input)) => {
                steps.push(PedigreeEntry { call, md5hash: current });
                match input {
                    Some(prev) => current = prev,
                    None => break,
                }
            }
            None => {
                steps.push(PedigreeEntry {
                    call: name_of(&tags),
                    md5hash: current,
                });
                break;
            }
        }
    }
    steps.reverse();
    Ok(Pedigree { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::compute_hash;
    use crate::tag::Tag;
    use crate::time::Timestamp;
    use alloc::collections::BTreeMap;
    use alloc::format;
    use alloc::vec;
    use core::convert::Infallible;

    #[derive(Default)]
    struct Mem(BTreeMap<Md5Hash, Vec<TagRecord>>);

    impl Mem {
        fn add(&mut self, h: Md5Hash, tag: &str, at: &str) {
            self.0.entry(h).or_default().push(TagRecord::new(
                h,
                &Tag::new(tag).unwrap(),
                at.parse::<Timestamp>().unwrap(),
            ));
        }
    }

    impl TagLookup for Mem {
        type Error = Infallible;
        fn tags_of(&self, hash: &Md5Hash) -> Result<Vec<TagRecord>, Infallible> {
            Ok(self.0.get(hash).cloned().unwrap_or_default())
        }
    }

    const T1: &str = "2016-02-09 16:42:59";
    const T2: &str = "2016-02-09 16:43:00";

    #[test]
    fn chain_is_root_first() {
        let (a, b, c) = (compute_hash(b"a"), compute_hash(b"b"), compute_hash(b"c"));
        let mut m = Mem::default();
        m.add(a, "name:iris", T1);
        m.add(b, "name:f", T1);
        m.add(b, &format!("relationWith:{a}"), T1);
        m.add(b, "call:filter(Sepal.Length < 6)", T1);
        m.add(c, &format!("relationWith:{b}"), T2);
        m.add(c, "call:summary()", T2);
        let p = trace_pedigree(&m, c).unwrap();
        let calls: Vec<_> = p.steps.iter().map(|s| (s.call.as_str(), s.md5hash)).collect();
        assert_eq!(calls, vec![("iris", a), ("filter(Sepal.Length < 6)", b), ("summary()", c)]);
    }

    #[test]
    fn data_relation_does_not_extend_pedigree() {
        let (data, plot) = (compute_hash(b"d"), compute_hash(b"p"));
        let mut m = Mem::default();
        m.add(data, "name:iris", T1);
        m.add(data, &format!("relationWith:{plot}"), T1);
        assert_eq!(trace_pedigree(&m, data).unwrap().len(), 1);
        assert_eq!(data_relations(&m.0[&data]), vec![plot]);
    }

    #[test]
    fn relation_from_another_event_is_not_an_input() {
        let (a, b) = (compute_hash(b"a"), compute_hash(b"b"));
        let mut m = Mem::default();
        m.add(b, &format!("relationWith:{a}"), T1);
        m.add(b, "call:f()", T2);
        let p = trace_pedigree(&m, b).unwrap();
        assert_eq!(p.steps, vec![PedigreeEntry { call: "f()".into(), md5hash: b }]);
    }

    #[test]
    fn cycle_is_reported() {
        let (a, b) = (compute_hash(b"a"), compute_hash(b"b"));
        let mut m = Mem::default();
        m.add(a, &format!("relationWith:{b}"), T1);
        m.add(a, "call:f()", T1);
        m.add(b, &format!("relationWith:{a}"), T1);
        m.add(b, "call:g()", T1);
        assert!(matches!(trace_pedigree(&m, a), Err(HistoryError::Cyclic(_))));
    }
}
