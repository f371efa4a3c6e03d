//! Automatic tag extraction.
//!
//! Every artifact gets `name`, `class`, `date` and one `format` tag per
//! stored format. Kind-specific tags come from extractors registered per
//! kind; registering another extractor for a kind adds to its output.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::envelope::{ArtifactEnvelope, ArtifactKind, Payload};
use crate::hash::Md5Hash;
use crate::tag::{keys, Tag, TagRecord};
use crate::time::Timestamp;

pub trait TagExtractor: Send + Sync {
    fn extract(&self, envelope: &ArtifactEnvelope, out: &mut Vec<Tag>);
}

impl<F> TagExtractor for F
where
    F: Fn(&ArtifactEnvelope, &mut Vec<Tag>) + Send + Sync,
{
    fn extract(&self, envelope: &ArtifactEnvelope, out: &mut Vec<Tag>) {
        self(envelope, out)
    }
}

struct DatasetTags;

impl TagExtractor for DatasetTags {
    fn extract(&self, envelope: &ArtifactEnvelope, out: &mut Vec<Tag>) {
        if let Payload::Dataset(d) = &envelope.payload {
            out.extend(d.column_names().map(|c| Tag::from_parts(keys::VARNAME, c)));
        }
    }
}

struct LinearModelTags;

impl TagExtractor for LinearModelTags {
    fn extract(&self, envelope: &ArtifactEnvelope, out: &mut Vec<Tag>) {
        if let Payload::LinearModel(m) = &envelope.payload {
            out.extend(m.coefficients.keys().map(|c| Tag::from_parts(keys::COEFNAME, c)));
            out.push(Tag::from_parts(keys::RANK, m.rank));
            out.push(Tag::from_parts(keys::DF_RESIDUAL, m.df_residual));
        }
    }
}

struct PlotSpecTags;

impl TagExtractor for PlotSpecTags {
    fn extract(&self, envelope: &ArtifactEnvelope, out: &mut Vec<Tag>) {
        if let Payload::PlotSpec(p) = &envelope.payload {
            out.push(Tag::from_parts(keys::LABELX, &p.label_x));
            out.push(Tag::from_parts(keys::LABELY, &p.label_y));
        }
    }
}

pub struct ExtractorRegistry {
    extractors: BTreeMap<ArtifactKind, Vec<Box<dyn TagExtractor>>>,
}

impl ExtractorRegistry {
    /// A registry that emits only the common tags.
    pub fn empty() -> Self {
        ExtractorRegistry {
            extractors: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, kind: ArtifactKind, extractor: impl TagExtractor + 'static) {
        self.extractors
            .entry(kind)
            .or_default()
            .push(Box::new(extractor));
    }

    /// Tags for `envelope` in emission order: name, class, kind-specific,
    /// date, formats.
    pub fn tags_for(&self, envelope: &ArtifactEnvelope, at: Timestamp) -> Vec<Tag> {
        let mut out = alloc::vec![
            Tag::from_parts(keys::NAME, &envelope.name),
            Tag::from_parts(keys::CLASS, envelope.kind()),
        ];
        for ex in self.extractors.get(&envelope.kind()).into_iter().flatten() {
            ex.extract(envelope, &mut out);
        }
        out.push(Tag::from_parts(keys::DATE, at));
        out.extend(envelope.formats().iter().map(|f| Tag::from_parts(keys::FORMAT, f)));
        out
    }

    pub fn extract(&self, envelope: &ArtifactEnvelope, hash: Md5Hash, at: Timestamp) -> Vec<TagRecord> {
        self.tags_for(envelope, at)
            .iter()
            .map(|t| TagRecord::new(hash, t, at))
            .collect()
    }
}

impl Default for ExtractorRegistry {
    fn default() -> Self {
        let mut reg = ExtractorRegistry::empty();
        reg.register(ArtifactKind::Dataset, DatasetTags);
        reg.register(ArtifactKind::LinearModel, LinearModelTags);
        reg.register(ArtifactKind::PlotSpec, PlotSpecTags);
        reg
    }
}

/// Extracts tags with the default registry.
pub fn extract_tags(envelope: &ArtifactEnvelope, hash: Md5Hash, at: Timestamp) -> Vec<TagRecord> {
    ExtractorRegistry::default().extract(envelope, hash, at)
}
