//! Read-only SQLite version 3 file reader.
//!
//! Enough of the on-disk format to enumerate every live row of a rowid table:
//! the 100-byte header, the schema table on page 1, table b-tree pages,
//! overflow chains, varints and record serial types. Index b-trees,
//! `WITHOUT ROWID` tables and pointer-map pages are reported as
//! [`SqliteError::UnsupportedFeature`]. Freelist pages are never looked at.
//!
//! A [`Database`] borrows the file image and never copies or mutates it.

mod btree;
pub mod ddl;
mod header;
mod record;
mod varint;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use btree::TableWalk;
pub use header::{parse_header, sniff, DbHeader, TextEncoding, HEADER_LEN, MAGIC};
pub use record::{decode_record, serial_type_len, CellValue, DecodedRecord};
pub use varint::{read_varint, write_varint};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SqliteError {
    #[error("not an SQLite 3 database (magic mismatch)")]
    MagicMismatch,
    #[error("header too short: {0} bytes")]
    TooShort(usize),
    #[error("invalid page size {0}")]
    BadPageSize(u32),
    #[error("invalid text encoding code {0}")]
    BadEncoding(u32),
    #[error("file truncated: header implies {expected} bytes, found {actual}")]
    TruncatedFile { expected: u64, actual: u64 },
    #[error("varint at offset {offset} runs past end of buffer")]
    TruncatedVarint { offset: usize },
    #[error("schema table unreadable: {0}")]
    CorruptSchemaPage(String),
    #[error("corrupt page {page}: {reason}")]
    CorruptPage { page: u32, reason: String },
    #[error("overflow chain revisits page {page}")]
    CyclicOverflow { page: u32 },
    #[error("reserved serial type {0}")]
    SerialTypeReserved(u64),
    #[error("record declares {declared} bytes but only {available} are present")]
    RecordOverrun { declared: usize, available: usize },
    #[error("unsupported database feature: {0}")]
    UnsupportedFeature(String),
    #[error("no such table: {0}")]
    NoSuchTable(String),
}

pub type Result<T> = std::result::Result<T, SqliteError>;

/// One live row of a table b-tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub rowid: i64,
    pub cells: Vec<CellValue>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub text_damaged: bool,
}

/// A `table` entry of the schema table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub name: String,
    pub root_page: u32,
    pub ddl_text: String,
    pub columns: Vec<String>,
    pub rowid_alias: Option<usize>,
    pub without_rowid: bool,
}

impl TableSchema {
    /// Column index by name, ASCII case-insensitive.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.eq_ignore_ascii_case(name))
    }

    /// Value of column `idx` in `row`, substituting the rowid for an
    /// `INTEGER PRIMARY KEY` alias and `Null` for columns added after the row
    /// was written.
    pub fn cell(&self, row: &RecordRow, idx: usize) -> CellValue {
        if self.rowid_alias == Some(idx) {
            return CellValue::Integer(row.rowid);
        }
        row.cells.get(idx).cloned().unwrap_or(CellValue::Null)
    }
}

/// Where and why a table walk stopped early.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageReport {
    pub table: String,
    pub rows_recovered: usize,
    pub last_good_rowid: Option<i64>,
    pub error: String,
}

/// All rows recovered from one table, plus the damage that ended the walk, if any.
#[derive(Debug, Clone)]
pub struct TableScan {
    pub schema: TableSchema,
    pub rows: Vec<RecordRow>,
    pub damage: Option<DamageReport>,
}

/// A database image opened for reading.
#[derive(Debug, Clone)]
pub struct Database<'a> {
    bytes: &'a [u8],
    header: DbHeader,
    pages_present: u32,
}

impl<'a> Database<'a> {
    /// Open an image. A file shorter than its header claims still opens, so
    /// the pages that survive can be read; [`Database::truncation`] reports
    /// the shortfall.
    pub fn open(bytes: &'a [u8]) -> Result<Self> {
        let header = DbHeader::decode(bytes)?;
        let pages_present = (bytes.len() as u64 / header.page_size as u64).min(u32::MAX as u64) as u32;
        Ok(Database {
            bytes,
            header,
            pages_present,
        })
    }

    pub fn header(&self) -> &DbHeader {
        &self.header
    }

    pub fn truncation(&self) -> Option<SqliteError> {
        (self.header.expected_len() > self.bytes.len() as u64).then(|| SqliteError::TruncatedFile {
            expected: self.header.expected_len(),
            actual: self.bytes.len() as u64,
        })
    }

    fn page(&self, pgno: u32) -> Result<&'a [u8]> {
        if pgno == 0 || pgno > self.header.page_count {
            return Err(SqliteError::CorruptPage {
                page: pgno,
                reason: format!("page number outside 1..={}", self.header.page_count),
            });
        }
        if pgno > self.pages_present {
            return Err(SqliteError::CorruptPage {
                page: pgno,
                reason: "page lies beyond the end of the truncated file".into(),
            });
        }
        let size = self.header.page_size as usize;
        let start = (pgno as usize - 1) * size;
        Ok(&self.bytes[start..start + size])
    }

    fn is_ptrmap_page(&self, pgno: u32) -> bool {
        if self.header.largest_root_page == 0 || pgno < 2 {
            return false;
        }
        let per_map = self.header.usable_size() as u32 / 5;
        (pgno - 2) % (per_map + 1) == 0
    }

    /// Every rowid table listed in the schema table, ordered by name.
    pub fn list_tables(&self) -> Result<Vec<TableSchema>> {
        let mut tables = Vec::new();
        for row in self.walk_table(1) {
            let row = row.map_err(|e| SqliteError::CorruptSchemaPage(e.to_string()))?;
            let text = |i: usize| row.cells.get(i).and_then(CellValue::as_text).unwrap_or_default();
            if text(0) != "table" {
                continue;
            }
            let root = row.cells.get(3).and_then(CellValue::as_i64).unwrap_or(0);
            if root <= 0 {
                // virtual tables have no b-tree
                continue;
            }
            if root > self.header.page_count as i64 {
                return Err(SqliteError::CorruptSchemaPage(format!(
                    "table {} has root page {root} beyond page count {}",
                    text(1),
                    self.header.page_count
                )));
            }
            let ddl = text(4);
            let shape = ddl::table_shape(&ddl);
            tables.push(TableSchema {
                name: text(1),
                root_page: root as u32,
                ddl_text: ddl,
                columns: shape.columns,
                rowid_alias: shape.rowid_alias,
                without_rowid: shape.without_rowid,
            });
        }
        tables.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(tables)
    }

    /// Stream the rows of the table b-tree rooted at `root_page`.
    pub fn walk_table(&self, root_page: u32) -> TableWalk<'_, 'a> {
        TableWalk::new(self, root_page)
    }

    /// Collect a whole table, converting a mid-walk failure into a damage report.
    pub fn scan_table(&self, schema: &TableSchema) -> Result<TableScan> {
        if schema.without_rowid {
            return Err(SqliteError::UnsupportedFeature(format!(
                "table {} is WITHOUT ROWID",
                schema.name
            )));
        }
        let mut rows = Vec::new();
        let mut damage = None;
        for item in self.walk_table(schema.root_page) {
            match item {
                Ok(row) => rows.push(row),
                Err(SqliteError::UnsupportedFeature(what)) => {
                    return Err(SqliteError::UnsupportedFeature(what))
                }
                Err(e) => {
                    damage = Some(DamageReport {
                        table: schema.name.clone(),
                        rows_recovered: rows.len(),
                        last_good_rowid: rows.last().map(|r: &RecordRow| r.rowid),
                        error: e.to_string(),
                    });
                }
            }
        }
        Ok(TableScan {
            schema: schema.clone(),
            rows,
            damage,
        })
    }

    pub fn table(&self, name: &str) -> Result<TableSchema> {
        self.list_tables()?
            .into_iter()
            .find(|t| t.name == name)
            .ok_or_else(|| SqliteError::NoSuchTable(name.to_string()))
    }
}
