//! Minimal RFC 4180 reader and writer.
//!
//! Records end with LF. A field is quoted when it contains a comma, quote,
//! CR or LF, or when it is the only field of its record and empty (so the
//! record is not mistaken for a blank line).

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn needs_quotes(field: &str, lone: bool) -> bool {
    (lone && field.is_empty()) || field.bytes().any(|b| matches!(b, b',' | b'"' | b'\n' | b'\r'))
}

pub fn write_record<S: AsRef<str>>(out: &mut String, fields: &[S]) {
    let lone = fields.len() == 1;
    for (i, field) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let field = field.as_ref();
        if needs_quotes(field, lone) {
            out.push('"');
            for c in field.chars() {
                if c == '"' {
                    out.push('"');
                }
                out.push(c);
            }
            out.push('"');
        } else {
            out.push_str(field);
        }
    }
    out.push('\n');
}

/// Parses CSV text into records. Accepts LF or CRLF terminators and an
/// unterminated final record.
pub fn parse(text: &str) -> Result<Vec<Vec<String>>> {
    let mut records = Vec::new();
    let mut record = Vec::new();
    let mut field = String::new();
    let mut chars = text.chars().peekable();
    let mut in_quotes = false;
    let mut field_started = false;

    while let Some(c) = chars.next() {
        if in_quotes {
            if c == '"' {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    field.push('"');
                } else {
                    in_quotes = false;
                    match chars.peek() {
                        None | Some(',') | Some('\n') | Some('\r') => {}
                        Some(_) => {
                            return Err(Error::InvalidPayload(
                                "csv: text after closing quote".into(),
                            ))
                        }
                    }
                }
            } else {
                field.push(c);
            }
            continue;
        }
        match c {
            '"' if !field_started && field.is_empty() => {
                in_quotes = true;
                field_started = true;
            }
            '"' => return Err(Error::InvalidPayload("csv: stray quote in field".into())),
            ',' => {
                record.push(core::mem::take(&mut field));
                field_started = false;
            }
            '\r' if chars.peek() == Some(&'\n') => {}
            '\n' => {
                record.push(core::mem::take(&mut field));
                records.push(core::mem::take(&mut record));
                field_started = false;
            }
            _ => {
                field.push(c);
                field_started = true;
            }
        }
    }
    if in_quotes {
        return Err(Error::InvalidPayload("csv: unterminated quoted field".into()));
    }
    if field_started || !field.is_empty() || !record.is_empty() {
        record.push(field);
        records.push(record);
    }
    Ok(records)
}
