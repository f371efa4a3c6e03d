//! The `backpack.db` relational index.
//!
//! Two tables, `artifact(md5hash, name, createdDate)` and
//! `tag(artifact, tag, createdDate)`. Insertion order (rowid) is meaningful:
//! pedigree reconstruction pairs adjacent tags of one artifact.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use arcvault_core::{ArtifactRow, HashPrefix, Md5Hash, TagRecord};
use rusqlite::{params, Connection, OpenFlags, OptionalExtension, Transaction};

use crate::error::Result;

pub const INDEX_FILE: &str = "backpack.db";

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS artifact (md5hash TEXT, name TEXT, createdDate TEXT);
CREATE TABLE IF NOT EXISTS tag (artifact TEXT, tag TEXT, createdDate TEXT);
CREATE INDEX IF NOT EXISTS artifact_md5hash ON artifact (md5hash);
CREATE INDEX IF NOT EXISTS tag_artifact ON tag (artifact);
CREATE INDEX IF NOT EXISTS tag_tag ON tag (tag);
";

pub struct Index {
    conn: Connection,
}

fn row_artifact(row: &rusqlite::Row<'_>) -> rusqlite::Result<(String, String, String)> {
    Ok((row.get(0)?, row.get(1)?, row.get(2)?))
}

fn parse_artifact((h, name, d): (String, String, String)) -> Result<ArtifactRow> {
    Ok(ArtifactRow {
        md5hash: h.parse()?,
        name,
        created_date: d.parse()?,
    })
}

fn parse_tag((h, tag, d): (String, String, String)) -> Result<TagRecord> {
    Ok(TagRecord {
        artifact: h.parse()?,
        tag,
        created_date: d.parse()?,
    })
}

impl Index {
    pub fn create(path: &Path) -> Result<Index> {
        let conn = Connection::open(path)?;
        conn.execute_batch(SCHEMA)?;
        Self::configure(conn)
    }

    pub fn open(path: &Path, read_only: bool) -> Result<Index> {
        let flags = if read_only {
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX
        } else {
            OpenFlags::SQLITE_OPEN_READ_WRITE | OpenFlags::SQLITE_OPEN_NO_MUTEX
        };
        let conn = Connection::open_with_flags(path, flags)?;
        Self::configure(conn)
    }

    fn configure(conn: Connection) -> Result<Index> {
        conn.busy_timeout(Duration::from_secs(10))?;
        Ok(Index { conn })
    }

    /// True when both tables exist.
    pub fn has_schema(&self) -> Result<bool> {
        let n: i64 = self.conn.query_row(
            "SELECT COUNT(*) FROM sqlite_master WHERE type = 'table' AND name IN ('artifact', 'tag')",
            [],
            |r| r.get(0),
        )?;
        Ok(n == 2)
    }

    pub fn transaction(&mut self) -> Result<Transaction<'_>> {
        Ok(self.conn.transaction()?)
    }

    pub fn insert_artifact(tx: &Transaction<'_>, row: &ArtifactRow) -> Result<()> {
        tx.execute(
            "INSERT INTO artifact (md5hash, name, createdDate) VALUES (?1, ?2, ?3)",
            params![row.md5hash.to_hex(), row.name, row.created_date.to_string()],
        )?;
        Ok(())
    }

    pub fn insert_tag(tx: &Transaction<'_>, rec: &TagRecord) -> Result<()> {
        tx.execute(
            "INSERT INTO tag (artifact, tag, createdDate) VALUES (?1, ?2, ?3)",
            params![rec.artifact.to_hex(), rec.tag, rec.created_date.to_string()],
        )?;
        Ok(())
    }

    pub fn delete_artifact(tx: &Transaction<'_>, hash: &Md5Hash) -> Result<()> {
        let h = hash.to_hex();
        tx.execute("DELETE FROM artifact WHERE md5hash = ?1", [&h])?;
        tx.execute("DELETE FROM tag WHERE artifact = ?1", [&h])?;
        Ok(())
    }

    pub fn contains(&self, hash: &Md5Hash) -> Result<bool> {
        Ok(self
            .conn
            .query_row(
                "SELECT 1 FROM artifact WHERE md5hash = ?1 LIMIT 1",
                [hash.to_hex()],
                |_| Ok(()),
            )
            .optional()?
            .is_some())
    }

    /// All artifact rows, oldest first.
    pub fn artifact_rows(&self) -> Result<Vec<ArtifactRow>> {
        let mut stmt = self
            .conn
            .prepare("SELECT md5hash, name, createdDate FROM artifact ORDER BY createdDate, rowid")?;
        let rows = stmt.query_map([], row_artifact)?;
        rows.map(|r| parse_artifact(r?)).collect()
    }

    pub fn artifact_rows_of(&self, hash: &Md5Hash) -> Result<Vec<ArtifactRow>> {
        let mut stmt = self.conn.prepare(
            "SELECT md5hash, name, createdDate FROM artifact WHERE md5hash = ?1 ORDER BY rowid",
        )?;
        let rows = stmt.query_map([hash.to_hex()], row_artifact)?;
        rows.map(|r| parse_artifact(r?)).collect()
    }

    /// All tag rows, ordered by createdDate then insertion order.
    pub fn tag_rows(&self) -> Result<Vec<TagRecord>> {
        let mut stmt = self
            .conn
            .prepare("SELECT artifact, tag, createdDate FROM tag ORDER BY createdDate, rowid")?;
        let rows = stmt.query_map([], row_artifact)?;
        rows.map(|r| parse_tag(r?)).collect()
    }

    /// Tags of one artifact in insertion order.
    pub fn tags_of(&self, hash: &Md5Hash) -> Result<Vec<TagRecord>> {
        let mut stmt = self.conn.prepare(
            "SELECT artifact, tag, createdDate FROM tag WHERE artifact = ?1 ORDER BY rowid",
        )?;
        let rows = stmt.query_map([hash.to_hex()], row_artifact)?;
        rows.map(|r| parse_tag(r?)).collect()
    }

    pub fn hashes_with_prefix(&self, prefix: &HashPrefix) -> Result<Vec<Md5Hash>> {
        let p = prefix.as_str();
        let mut stmt = self.conn.prepare(
            "SELECT DISTINCT md5hash FROM artifact WHERE substr(md5hash, 1, ?1) = ?2 ORDER BY md5hash",
        )?;
        let rows = stmt.query_map(params![p.len() as i64, p], |r| r.get::<_, String>(0))?;
        rows.map(|r| Ok(r?.parse()?)).collect()
    }

    pub fn distinct_hashes(&self) -> Result<Vec<Md5Hash>> {
        let mut stmt = self
            .conn
            .prepare("SELECT DISTINCT md5hash FROM artifact ORDER BY md5hash")?;
        let rows = stmt.query_map([], |r| r.get::<_, String>(0))?;
        rows.map(|r| Ok(r?.parse()?)).collect()
    }

    /// Artifacts carrying exactly this tag text.
    pub fn hashes_with_tag(&self, tag: &str) -> Result<BTreeSet<Md5Hash>> {
        self.hash_set("SELECT DISTINCT artifact FROM tag WHERE tag = ?1", params![tag])
    }

    /// Artifacts carrying any tag with this key.
    pub fn hashes_with_key(&self, key: &str) -> Result<BTreeSet<Md5Hash>> {
        let prefix = format!("{key}:");
        self.hash_set(
            "SELECT DISTINCT artifact FROM tag WHERE substr(tag, 1, ?1) = ?2",
            params![prefix.chars().count() as i64, prefix],
        )
    }

    /// `(artifact, tag)` pairs whose tag text lies in `[low, high]`.
    pub fn tags_between(&self, low: &str, high: &str) -> Result<Vec<(Md5Hash, String)>> {
        let mut stmt = self
            .conn
            .prepare("SELECT artifact, tag FROM tag WHERE tag >= ?1 AND tag <= ?2")?;
        let rows = stmt.query_map(params![low, high], |r| {
            Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?))
        })?;
        let mut out = Vec::new();
        for r in rows {
            let (h, t) = r?;
            out.push((h.parse()?, t));
        }
        Ok(out)
    }

    fn hash_set(&self, sql: &str, p: impl rusqlite::Params) -> Result<BTreeSet<Md5Hash>> {
        let mut stmt = self.conn.prepare(sql)?;
        let rows = stmt.query_map(p, |r| r.get::<_, String>(0))?;
        rows.map(|r| Ok(r?.parse()?)).collect()
    }

    pub fn count_distinct_artifacts(&self) -> Result<u64> {
        let n: i64 = self
            .conn
            .query_row("SELECT COUNT(DISTINCT md5hash) FROM artifact", [], |r| r.get(0))?;
        Ok(n as u64)
    }

    /// Grouped counts from an arbitrary `SELECT key, count` query.
    pub fn grouped_counts(&self, sql: &str) -> Result<Vec<(String, u64)>> {
        let mut stmt = self.conn.prepare(sql)?;
        let rows = stmt.query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, i64>(1)? as u64)))?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    /// Raw rows, without parsing, for integrity checks.
    pub fn raw_artifact_rows(&self) -> Result<Vec<(String, String, String)>> {
        let mut stmt = self
            .conn
            .prepare("SELECT md5hash, name, createdDate FROM artifact ORDER BY rowid")?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, Option<String>>(0)?.unwrap_or_default(),
                r.get::<_, Option<String>>(1)?.unwrap_or_default(),
                r.get::<_, Option<String>>(2)?.unwrap_or_default(),
            ))
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn raw_tag_rows(&self) -> Result<Vec<(String, String, String)>> {
        let mut stmt = self
            .conn
            .prepare("SELECT artifact, tag, createdDate FROM tag ORDER BY rowid")?;
        let rows = stmt.query_map([], |r| {
            Ok((
                r.get::<_, Option<String>>(0)?.unwrap_or_default(),
                r.get::<_, Option<String>>(1)?.unwrap_or_default(),
                r.get::<_, Option<String>>(2)?.unwrap_or_default(),
            ))
        })?;
        Ok(rows.collect::<rusqlite::Result<_>>()?)
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }
}
