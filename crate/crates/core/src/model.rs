//! Record types shared by the app parsers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::notes::Notes;
use crate::schema_map::{Resolved, SchemaMap};
use crate::sqlite::{CellValue, Database, RecordRow, SqliteError, TableSchema};
use crate::timestamp::{EpochUnit, Timestamp};

/// Warning code for a row that could not be turned into a record.
pub const UNMAPPED_ROW: &str = "unmapped-row";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Incoming => "incoming",
            Direction::Outgoing => "outgoing",
        }
    }
}

/// Where a record came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub store_path: String,
    pub rowid: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Contact {
    pub store_path: String,
    pub rowid: i64,
    pub identifier: String,
    pub display_name: Option<String>,
    pub status: Option<String>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("{store_path}: no table for {key} (tables present: {})", available.join(", "))]
    MissingTable {
        store_path: String,
        key: String,
        available: Vec<String>,
    },
    #[error("{store_path}: {source}")]
    Sqlite {
        store_path: String,
        #[source]
        source: SqliteError,
    },
}

impl ParseError {
    pub(crate) fn sqlite(store_path: &str) -> impl Fn(SqliteError) -> ParseError + '_ {
        move |source| ParseError::Sqlite {
            store_path: store_path.to_string(),
            source,
        }
    }
}

pub(crate) fn required_table(
    db: &Database<'_>,
    map: &SchemaMap,
    key: &str,
    store_path: &str,
    notes: &mut Notes,
) -> Result<TableSchema, ParseError> {
    match map
        .find_table(db, key, store_path, notes)
        .map_err(ParseError::sqlite(store_path))?
    {
        Some(t) => Ok(t),
        None => Err(ParseError::MissingTable {
            store_path: store_path.to_string(),
            key: key.to_string(),
            available: db
                .list_tables()
                .map_err(ParseError::sqlite(store_path))?
                .into_iter()
                .map(|t| t.name)
                .collect(),
        }),
    }
}

/// Like [`required_table`], but a missing table becomes a warning.
pub(crate) fn optional_table(
    db: &Database<'_>,
    map: &SchemaMap,
    key: &str,
    store_path: &str,
    notes: &mut Notes,
) -> Result<Option<TableSchema>, ParseError> {
    match required_table(db, map, key, store_path, notes) {
        Ok(t) => Ok(Some(t)),
        Err(e @ ParseError::MissingTable { .. }) => {
            notes.warn(store_path, None, "missing-table", e.to_string());
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// All recoverable rows; damage is recorded in `notes`.
pub(crate) fn scan_rows(
    db: &Database<'_>,
    table: &TableSchema,
    store_path: &str,
    notes: &mut Notes,
) -> Result<Vec<RecordRow>, ParseError> {
    let scan = db.scan_table(table).map_err(ParseError::sqlite(store_path))?;
    if let Some(d) = scan.damage {
        notes.damaged(store_path, d);
    }
    for row in scan.rows.iter().filter(|r| r.text_damaged) {
        notes.warn(
            store_path,
            Some(row.rowid),
            "damaged-text",
            format!("{}: text not valid in the database encoding", table.name),
        );
    }
    Ok(scan.rows)
}

/// Text of a cell, `None` for NULL or empty.
pub(crate) fn text_cell(v: &CellValue) -> Option<String> {
    match v {
        CellValue::Null => None,
        other => other.as_text().filter(|s| !s.is_empty()),
    }
}

/// Resolved columns of one table; `None` entries were not found.
pub(crate) struct Columns {
    pub table: TableSchema,
    pub missing: Vec<&'static str>,
}

impl Columns {
    pub fn get(&self, row: &RecordRow, col: Option<&Resolved>) -> CellValue {
        col.map(|c| self.table.cell(row, c.index)).unwrap_or(CellValue::Null)
    }
}

/// Resolve `key`; a miss on a required key is warned once and remembered.
pub(crate) fn column(
    map: &SchemaMap,
    cols: &mut Columns,
    key: &'static str,
    required: bool,
    store_path: &str,
    notes: &mut Notes,
) -> Option<Resolved> {
    let found = map.resolve_column(&cols.table, key, store_path, notes);
    if found.is_none() && required {
        notes.warn(
            store_path,
            None,
            "unmapped-column",
            format!(
                "{}: no column for {key} (tried {})",
                cols.table.name,
                map.candidates(key).join(", ")
            ),
        );
        cols.missing.push(key);
    }
    found
}

/// Record the unit chosen for a timestamp, and warn when it is implausible.
pub(crate) fn note_timestamp(notes: &mut Notes, store_path: &str, field: &str, rowid: i64, ts: &Timestamp) {
    let unit = match ts.unit {
        EpochUnit::Milliseconds => "milliseconds (value >= 10^12)",
        EpochUnit::Seconds => "seconds (value < 10^12)",
    };
    notes.assume("timestamp.unit", store_path, format!("{field}: {unit}"));
    if ts.implausible {
        notes.warn(
            store_path,
            Some(rowid),
            "implausible-timestamp",
            format!("{field}: raw value {} predates 2001-09-09", ts.raw),
        );
    }
}
