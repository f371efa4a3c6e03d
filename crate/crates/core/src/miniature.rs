//! Human-readable previews stored next to each blob.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::envelope::{ArtifactEnvelope, DatasetPayload, Payload};

/// Number of dataset rows shown in a text miniature.
pub const MINIATURE_ROWS: usize = 6;

const HEX_PREVIEW_BYTES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiniatureFormat {
    Txt,
    Png,
}

impl MiniatureFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            MiniatureFormat::Txt => "txt",
            MiniatureFormat::Png => "png",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Miniature {
    pub format: MiniatureFormat,
    pub bytes: Vec<u8>,
}

impl Miniature {
    fn text(s: String) -> Self {
        Miniature {
            format: MiniatureFormat::Txt,
            bytes: s.into_bytes(),
        }
    }
}

pub fn make_miniature(envelope: &ArtifactEnvelope) -> Miniature {
    match &envelope.payload {
        Payload::Dataset(d) => Miniature::text(dataset_preview(d, MINIATURE_ROWS)),
        Payload::LinearModel(m) => {
            let mut rows = alloc::vec![[String::from("coefficient"), String::from("estimate")]];
            rows.extend(m.coefficients.iter().map(|(k, v)| [k.clone(), format!("{v}")]));
            let mut out = format!("formula: {}\n", m.formula);
            out.push_str(&align(rows.iter().map(|r| r.as_slice())));
            let _ = writeln!(out, "rank: {}  df.residual: {}", m.rank, m.df_residual);
            Miniature::text(out)
        }
        Payload::PlotSpec(p) => match &envelope.image {
            Some(png) => Miniature {
                format: MiniatureFormat::Png,
                bytes: png.clone(),
            },
            None => {
                let mut out = format!("plot: {}\nx: {}\ny: {}\n", p.geometry, p.label_x, p.label_y);
                if let Some(data) = p.data_ref {
                    let _ = writeln!(out, "data: {data}");
                }
                Miniature::text(out)
            }
        },
        Payload::Generic(g) => {
            let mut out = format!("{} bytes\n", g.bytes.len());
            for chunk in g.bytes[..g.bytes.len().min(HEX_PREVIEW_BYTES)].chunks(16) {
                let line: Vec<String> = chunk.iter().map(|b| format!("{b:02x}")).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
            Miniature::text(out)
        }
    }
}

/// Header plus the first `rows` rows, columns padded to equal width.
pub fn dataset_preview(data: &DatasetPayload, rows: usize) -> String {
    let header: Vec<String> = data.column_names().map(String::from).collect();
    let body: Vec<Vec<String>> = (0..data.row_count().min(rows)).map(|i| data.row(i)).collect();
    align(core::iter::once(header.as_slice()).chain(body.iter().map(|r| r.as_slice())))
}

fn align<'a>(rows: impl Iterator<Item = &'a [String]> + Clone) -> String {
    let mut widths: Vec<usize> = Vec::new();
    for row in rows.clone() {
        for (i, cell) in row.iter().enumerate() {
            let w = display_width(cell);
            match widths.get_mut(i) {
                Some(cur) => *cur = (*cur).max(w),
                None => widths.push(w),
            }
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            // newlines inside a cell would break the line count
            let flat: String = cell.chars().map(|c| if c.is_control() { ' ' } else { c }).collect();
            line.push_str(&flat);
            for _ in display_width(cell)..widths[i] {
                line.push(' ');
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn display_width(s: &str) -> usize {
    s.chars().count()
}
