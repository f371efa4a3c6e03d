//! Typed artifact envelopes and their canonical byte encodings.
//!
//! The canonical bytes of the payload are what gets hashed and stored as the
//! primary blob. Datasets become CSV, models and plot specs become canonical
//! JSON, generic blobs pass through untouched.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_json;
use crate::csv;
use crate::error::{Error, Result};
use crate::hash::{compute_hash, Md5Hash};

/// The four artifact kinds.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArtifactKind {
    Dataset,
    LinearModel,
    PlotSpec,
    Generic,
}

impl ArtifactKind {
    pub const ALL: [ArtifactKind; 4] = [
        ArtifactKind::Dataset,
        ArtifactKind::LinearModel,
        ArtifactKind::PlotSpec,
        ArtifactKind::Generic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArtifactKind::Dataset => "dataset",
            ArtifactKind::LinearModel => "linear-model",
            ArtifactKind::PlotSpec => "plot-spec",
            ArtifactKind::Generic => "generic",
        }
    }

    /// Default storage format; generic artifacts may override it.
    pub fn primary_format(&self) -> &'static str {
        match self {
            ArtifactKind::Dataset => "csv",
            ArtifactKind::LinearModel | ArtifactKind::PlotSpec => "json",
            ArtifactKind::Generic => "bin",
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtifactKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ArtifactKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidPayload(format!("unknown artifact kind `{s}`")))
    }
}

/// A dataset cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
}

impl Cell {
    /// Reads a CSV field, recognising numbers only when they print back to
    /// exactly the same text.
    pub fn from_field(raw: &str) -> Cell {
        match raw.parse::<f64>() {
            Ok(n) if n.is_finite() && n.to_string() == raw => Cell::Number(n),
            _ => Cell::Text(raw.into()),
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Number(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(n: f64) -> Self {
        Cell::Number(n)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<Cell>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: impl IntoIterator<Item = impl Into<Cell>>) -> Self {
        Column {
            name: name.into(),
            values: values.into_iter().map(Into::into).collect(),
        }
    }
}

/// Column-oriented table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetPayload {
    pub columns: Vec<Column>,
}

impl DatasetPayload {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let ds = DatasetPayload { columns };
        ds.validate()?;
        Ok(ds)
    }

    pub fn row_count(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Cells of row `i` rendered as text.
    pub fn row(&self, i: usize) -> Vec<String> {
        self.columns.iter().map(|c| c.values[i].render()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::InvalidPayload("dataset has no columns".into()));
        }
        let mut seen = BTreeSet::new();
        let rows = self.row_count();
        for col in &self.columns {
            if col.name.is_empty() {
                return Err(Error::InvalidPayload("dataset column with empty name".into()));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(Error::InvalidPayload(format!(
                    "duplicate column name `{}`",
                    col.name
                )));
            }
            if col.values.len() != rows {
                return Err(Error::InvalidPayload(format!(
                    "column `{}` has {} values, expected {rows}",
                    col.name,
                    col.values.len()
                )));
            }
            if col.values.iter().any(|v| matches!(v, Cell::Number(n) if !n.is_finite())) {
                return Err(Error::InvalidPayload(format!(
                    "column `{}` holds a non-finite number",
                    col.name
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut out = String::new();
        let header: Vec<&str> = self.column_names().collect();
        csv::write_record(&mut out, &header);
        for i in 0..self.row_count() {
            csv::write_record(&mut out, &self.row(i));
        }
        Ok(out.into_bytes())
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let text = core::str::from_utf8(bytes)
            .map_err(|_| Error::InvalidPayload("dataset is not UTF-8".into()))?;
        let mut records = csv::parse(text)?.into_iter();
        let header = records
            .next()
            .ok_or_else(|| Error::InvalidPayload("dataset has no header row".into()))?;
        let mut columns: Vec<Column> = header
            .into_iter()
            .map(|name| Column {
                name,
                values: Vec::new(),
            })
            .collect();
        for (line, record) in records.enumerate() {
            if record.len() != columns.len() {
                return Err(Error::InvalidPayload(format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    record.len(),
                    columns.len()
                )));
            }
            for (col, raw) in columns.iter_mut().zip(record) {
                col.values.push(Cell::from_field(&raw));
            }
        }
        DatasetPayload::new(columns)
    }
}

/// Fitted linear model summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LinearModelPayload {
    pub coefficients: BTreeMap<String, f64>,
    pub rank: u64,
    pub df_residual: u64,
    pub formula: String,
}

impl LinearModelPayload {
    pub fn validate(&self) -> Result<()> {
        if self.rank > self.coefficients.len() as u64 {
            return Err(Error::InvalidPayload(format!(
                "rank {} exceeds {} coefficients",
                self.rank,
                self.coefficients.len()
            )));
        }
        if let Some((name, _)) = self.coefficients.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidPayload(format!(
                "coefficient `{name}` is not finite"
            )));
        }
        Ok(())
    }
}

/// Declarative plot description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PlotSpecPayload {
    pub label_x: String,
    pub label_y: String,
    pub geometry: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_ref: Option<Md5Hash>,
}

impl PlotSpecPayload {
    pub fn validate(&self) -> Result<()> {
        if self.label_x.is_empty() || self.label_y.is_empty() {
            return Err(Error::InvalidPayload("plot labels must be non-empty".into()));
        }
        Ok(())
    }
}

/// Opaque bytes with a storage format (file extension).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericPayload {
    pub bytes: Vec<u8>,
    pub format: String,
}

impl GenericPayload {
    pub fn new(bytes: Vec<u8>) -> Self {
        GenericPayload {
            bytes,
            format: ArtifactKind::Generic.primary_format().into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = !self.format.is_empty()
            && self.format.len() <= 16
            && self
                .format
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
        if !ok {
            return Err(Error::InvalidPayload(format!(
                "invalid storage format `{}`",
                self.format
            )));
        }
        if self.format == "txt" {
            return Err(Error::InvalidPayload(
                "format `txt` is reserved for miniatures".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Dataset(DatasetPayload),
    LinearModel(LinearModelPayload),
    PlotSpec(PlotSpecPayload),
    Generic(GenericPayload),
}

impl Payload {
    pub fn kind(&self) -> ArtifactKind {
        match self {
            Payload::Dataset(_) => ArtifactKind::Dataset,
            Payload::LinearModel(_) => ArtifactKind::LinearModel,
            Payload::PlotSpec(_) => ArtifactKind::PlotSpec,
            Payload::Generic(_) => ArtifactKind::Generic,
        }
    }

    pub fn primary_format(&self) -> &str {
        match self {
            Payload::Generic(g) => &g.format,
            other => other.kind().primary_format(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Payload::Dataset(d) => d.validate(),
            Payload::LinearModel(m) => m.validate(),
            Payload::PlotSpec(p) => p.validate(),
            Payload::Generic(g) => g.validate(),
        }
    }

    /// Decodes primary-format bytes back into a payload of `kind`.
    pub fn decode(kind: ArtifactKind, format: &str, bytes: &[u8]) -> Result<Payload> {
        let json_err = |e: serde_json::Error| Error::InvalidPayload(e.to_string());
        let payload = match kind {
            ArtifactKind::Dataset => Payload::Dataset(DatasetPayload::from_csv(bytes)?),
            ArtifactKind::LinearModel => {
                Payload::LinearModel(serde_json::from_slice(bytes).map_err(json_err)?)
            }
            ArtifactKind::PlotSpec => {
                Payload::PlotSpec(serde_json::from_slice(bytes).map_err(json_err)?)
            }
            ArtifactKind::Generic => Payload::Generic(GenericPayload {
                bytes: bytes.to_vec(),
                format: format.into(),
            }),
        };
        payload.validate()?;
        Ok(payload)
    }
}

/// Deterministic bytes for a payload; these are hashed and stored.
pub fn canonicalize(payload: &Payload) -> Result<Vec<u8>> {
    payload.validate()?;
    match payload {
        Payload::Dataset(d) => d.to_csv(),
        Payload::LinearModel(m) => to_canonical_json(m),
        Payload::PlotSpec(p) => to_canonical_json(p),
        Payload::Generic(g) => Ok(g.bytes.clone()),
    }
}

/// The unit of storage: a named payload plus optional attachments.
///
/// Attachments do not contribute to the artifact's identity. A plot may carry
/// a pre-rendered PNG (stored as its miniature) and the dataset it draws,
/// which is archived as a separate artifact.
#[derive(Clone, Debug, PartialEq)]
pub struct ArtifactEnvelope {
    pub name: String,
    pub payload: Payload,
    pub image: Option<Vec<u8>>,
    pub dependent_data: Option<DatasetPayload>,
}

impl ArtifactEnvelope {
    pub fn new(name: impl Into<String>, payload: Payload) -> Self {
        ArtifactEnvelope {
            name: name.into(),
            payload,
            image: None,
            dependent_data: None,
        }
    }

    pub fn dataset(name: impl Into<String>, data: DatasetPayload) -> Self {
        Self::new(name, Payload::Dataset(data))
    }

    pub fn linear_model(name: impl Into<String>, model: LinearModelPayload) -> Self {
        Self::new(name, Payload::LinearModel(model))
    }

    pub fn plot(name: impl Into<String>, spec: PlotSpecPayload) -> Self {
        Self::new(name, Payload::PlotSpec(spec))
    }

    pub fn generic(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self::new(name, Payload::Generic(GenericPayload::new(bytes)))
    }

    /// Attaches the dataset a plot draws and points its `dataRef` at it.
    pub fn with_data(mut self, data: DatasetPayload) -> Result<Self> {
        let Payload::PlotSpec(spec) = &mut self.payload else {
            return Err(Error::InvalidPayload(
                "only plot specs carry dependent data".into(),
            ));
        };
        spec.data_ref = Some(compute_hash(&data.to_csv()?));
        self.dependent_data = Some(data);
        Ok(self)
    }

    /// Attaches a pre-rendered PNG to a plot spec.
    pub fn with_image(mut self, png: Vec<u8>) -> Result<Self> {
        if self.kind() != ArtifactKind::PlotSpec {
            return Err(Error::InvalidPayload("only plot specs carry images".into()));
        }
        self.image = Some(png);
        Ok(self)
    }

    pub fn kind(&self) -> ArtifactKind {
        self.payload.kind()
    }

    pub fn primary_format(&self) -> &str {
        self.payload.primary_format()
    }

    /// Storage formats of this envelope, primary first.
    pub fn formats(&self) -> Vec<String> {
        let mut out = alloc::vec![self.primary_format().to_string()];
        if self.image.is_some() {
            out.push("png".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidPayload("artifact name is empty".into()));
        }
        self.payload.validate()?;
        if let (Payload::PlotSpec(spec), Some(data)) = (&self.payload, &self.dependent_data) {
            if spec.data_ref != Some(compute_hash(&data.to_csv()?)) {
                return Err(Error::InvalidPayload(
                    "dataRef does not match the attached dataset".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        canonicalize(&self.payload)
    }

    pub fn hash(&self) -> Result<Md5Hash> {
        Ok(compute_hash(&self.canonical_bytes()?))
    }
}
