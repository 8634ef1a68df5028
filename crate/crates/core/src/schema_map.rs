//! Logical-field to column-name mapping for app databases.
//!
//! App updates rename columns, so every field a parser reads is looked up
//! through an ordered candidate list. Defaults cover the layouts this tool
//! ships fixtures for; an override file replaces candidate lists per key.
//!
//! Override file format, one key per line:
//!
//! ```text
//! # comment
//! whatsapp.messages.text = data, body
//! viber.call.duration_unit = milliseconds
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::notes::Notes;
use crate::sqlite::{Database, SqliteError, TableSchema};

/// Every recognised key with its default candidates.
pub const DEFAULTS: &[(&str, &[&str])] = &[
    ("whatsapp.messages.table", &["messages"]),
    ("whatsapp.messages.thread", &["key_remote_jid"]),
    ("whatsapp.messages.from_me", &["key_from_me"]),
    ("whatsapp.messages.text", &["data"]),
    ("whatsapp.messages.timestamp", &["timestamp"]),
    ("whatsapp.messages.media_name", &["media_name"]),
    ("whatsapp.messages.media_url", &["media_url"]),
    ("whatsapp.chat_list.table", &["chat_list"]),
    ("whatsapp.chat_list.thread", &["key_remote_jid"]),
    ("whatsapp.contacts.table", &["wa_contacts"]),
    ("whatsapp.contacts.identifier", &["jid"]),
    ("whatsapp.contacts.name", &["display_name"]),
    ("whatsapp.contacts.status", &["status"]),
    ("viber.call_log.table", &["viber_call_log"]),
    ("viber.data.calls_table", &["calls"]),
    ("viber.call.number", &["number"]),
    ("viber.call.date", &["date"]),
    ("viber.call.duration", &["duration"]),
    ("viber.call.type", &["type"]),
    ("viber.call.code.incoming", &["1"]),
    ("viber.call.code.outgoing", &["2"]),
    ("viber.call.code.missed", &["3"]),
    ("viber.call.duration_unit", &["seconds"]),
    ("viber.data.numbers_table", &["viber_numbers"]),
    ("viber.data.numbers.number", &["number"]),
    ("viber.phonebook.contact_table", &["phonebook_contact"]),
    ("viber.phonebook.contact.id", &["_id"]),
    ("viber.phonebook.contact.name", &["display_name"]),
    ("viber.phonebook.raw_table", &["phonebook_raw_contact"]),
    ("viber.phonebook.raw.id", &["_id"]),
    ("viber.phonebook.raw.contact_id", &["contact_id"]),
    ("viber.phonebook.data_table", &["phonebook_data"]),
    ("viber.phonebook.data.raw_id", &["raw_id"]),
    ("viber.phonebook.data.number", &["data1"]),
    ("viber.messages.table", &["messages"]),
    ("viber.messages.thread", &["thread_id"]),
    ("viber.messages.text", &["body"]),
    ("viber.messages.date", &["date"]),
    ("viber.messages.direction", &["send_type"]),
    ("viber.messages.code.outgoing", &["1"]),
    ("viber.messages.code.incoming", &["0"]),
    ("viber.threads.table", &["threads"]),
    ("viber.threads.id", &["_id"]),
    ("viber.participants.table", &["participants"]),
    ("viber.participants.thread", &["thread_id"]),
    ("viber.participants.number", &["number"]),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaMapError {
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected `key = candidate[, candidate...]`")]
    Syntax { line: usize },
    #[error("line {line}: key {key:?} has no candidates")]
    Empty { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("cannot read schema map {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaMap {
    candidates: BTreeMap<String, Vec<String>>,
    overridden: BTreeSet<String>,
}

impl Default for SchemaMap {
    fn default() -> Self {
        SchemaMap {
            candidates: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
                .collect(),
            overridden: BTreeSet::new(),
        }
    }
}

/// Lowercase with spaces as underscores, so `Viber numbers` finds `viber_numbers`.
pub fn normalize_table_name(name: &str) -> String {
    name.trim().to_lowercase().replace([' ', '-'], "_")
}

/// How a logical field was resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub index: usize,
    pub column: String,
    /// Position in the candidate list; above zero means a fallback was used.
    pub rank: usize,
}

impl SchemaMap {
    pub fn parse(text: &str) -> Result<Self, SchemaMapError> {
        let mut map = SchemaMap::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(SchemaMapError::Syntax { line })?;
            let key = key.trim();
            if !map.candidates.contains_key(key) {
                return Err(SchemaMapError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            let values: Vec<String> = value
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(str::to_string)
                .collect();
            if values.is_empty() {
                return Err(SchemaMapError::Empty {
                    line,
                    key: key.to_string(),
                });
            }
            if !map.overridden.insert(key.to_string()) {
                return Err(SchemaMapError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            map.candidates.insert(key.to_string(), values);
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, SchemaMapError> {
        let text = std::fs::read_to_string(path).map_err(|e| SchemaMapError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn candidates(&self, key: &str) -> &[String] {
        self.candidates
            .get(key)
            .map(Vec::as_slice)
            .unwrap_or_else(|| panic!("unknown schema-map key {key}"))
    }

    /// First candidate, for keys holding a single setting.
    pub fn setting(&self, key: &str) -> &str {
        &self.candidates(key)[0]
    }

    pub fn is_overridden(&self, key: &str) -> bool {
        self.overridden.contains(key)
    }

    /// Integer codes listed for `key`, ignoring non-numeric entries.
    pub fn codes(&self, key: &str) -> Vec<i64> {
        self.candidates(key).iter().filter_map(|c| c.parse().ok()).collect()
    }

    fn origin(&self, key: &str, rank: usize) -> &'static str {
        match (self.is_overridden(key), rank) {
            (true, 0) => "override",
            (true, _) => "override fallback",
            (false, 0) => "default",
            (false, _) => "default fallback",
        }
    }

    /// Find the table for `key` in `db`, recording the choice as an assumption.
    pub fn find_table(
        &self,
        db: &Database<'_>,
        key: &str,
        store_path: &str,
        notes: &mut Notes,
    ) -> Result<Option<TableSchema>, SqliteError> {
        let tables = db.list_tables()?;
        for (rank, cand) in self.candidates(key).iter().enumerate() {
            let want = normalize_table_name(cand);
            if let Some(t) = tables.iter().find(|t| normalize_table_name(&t.name) == want) {
                notes.assume(
                    key,
                    store_path,
                    format!("table {} ({})", t.name, self.origin(key, rank)),
                );
                return Ok(Some(t.clone()));
            }
        }
        Ok(None)
    }

    /// Resolve a column for `key` within `table`, recording the choice.
    pub fn resolve_column(
        &self,
        table: &TableSchema,
        key: &str,
        store_path: &str,
        notes: &mut Notes,
    ) -> Option<Resolved> {
        for (rank, cand) in self.candidates(key).iter().enumerate() {
            if let Some(index) = table.column_index(cand) {
                let column = table.columns[index].clone();
                notes.assume(
                    key,
                    store_path,
                    format!("column {}.{column} ({})", table.name, self.origin(key, rank)),
                );
                return Some(Resolved {
                    index,
                    column,
                    rank,
                });
            }
        }
        None
    }
}
