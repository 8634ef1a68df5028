//! WhatsApp `msgstore.db` and `wa.db` decoding.

use serde::{Deserialize, Serialize};

use crate::model::{
    column, note_timestamp, required_table, scan_rows, text_cell, Columns, Contact, Direction,
    ParseError,
};
use crate::notes::Notes;
use crate::schema_map::SchemaMap;
use crate::sqlite::{CellValue, Database};
use crate::timestamp::{normalize_timestamp, Timestamp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub store_path: String,
    pub rowid: i64,
    pub thread_key: String,
    pub direction: Direction,
    pub timestamp: Timestamp,
    pub text: Option<String>,
    pub media_name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_cells: Vec<CellValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChatThread {
    pub store_path: String,
    pub rowid: i64,
    pub thread_key: String,
}

fn media_from_url(url: &str) -> Option<String> {
    url.rsplit('/').next().filter(|s| !s.is_empty()).map(str::to_string)
}

/// Decode every row of the `messages` table.
pub fn parse_messages(
    db: &Database<'_>,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<Vec<ChatMessage>, ParseError> {
    let table = required_table(db, map, "whatsapp.messages.table", store_path, notes)?;
    if let Ok(tables) = db.list_tables() {
        if tables.iter().any(|t| t.name == "sqlite_sequence") {
            notes.assume(
                "whatsapp.sqlite_sequence",
                store_path,
                "sqlite_sequence present; recorded, not interpreted",
            );
        }
    }
    let mut cols = Columns {
        table,
        missing: Vec::new(),
    };
    let thread = column(map, &mut cols, "whatsapp.messages.thread", true, store_path, notes);
    let from_me = column(map, &mut cols, "whatsapp.messages.from_me", true, store_path, notes);
    let stamp = column(map, &mut cols, "whatsapp.messages.timestamp", true, store_path, notes);
    let text = column(map, &mut cols, "whatsapp.messages.text", false, store_path, notes);
    let media = column(map, &mut cols, "whatsapp.messages.media_name", false, store_path, notes);
    let media_url = column(map, &mut cols, "whatsapp.messages.media_url", false, store_path, notes);
    let table_name = cols.table.name.clone();

    let rows = scan_rows(db, &cols.table, store_path, notes)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        if !cols.missing.is_empty() {
            notes.drop_row(store_path, &table_name, row.rowid, format!("unmapped {}", cols.missing.join(", ")));
            continue;
        }
        let Some(thread_key) = text_cell(&cols.get(row, thread.as_ref())) else {
            notes.drop_row(store_path, &table_name, row.rowid, "empty thread key");
            continue;
        };
        let direction = match cols.get(row, from_me.as_ref()).as_i64() {
            Some(1) => Direction::Outgoing,
            Some(0) => Direction::Incoming,
            other => {
                notes.drop_row(store_path, &table_name, row.rowid, format!("from-me flag {other:?} is neither 0 nor 1"));
                continue;
            }
        };
        let Some(raw_ts) = cols.get(row, stamp.as_ref()).as_i64() else {
            notes.drop_row(store_path, &table_name, row.rowid, "timestamp missing or not an integer");
            continue;
        };
        let timestamp = normalize_timestamp(raw_ts);
        note_timestamp(notes, store_path, &table_name, row.rowid, &timestamp);

        let mut media_name = text_cell(&cols.get(row, media.as_ref()));
        if media_name.is_none() {
            if let Some(name) = text_cell(&cols.get(row, media_url.as_ref())).and_then(|u| media_from_url(&u)) {
                notes.assume(
                    "whatsapp.messages.media_name",
                    store_path,
                    "media name taken from the media URL's last segment",
                );
                media_name = Some(name);
            }
        }
        out.push(ChatMessage {
            store_path: store_path.to_string(),
            rowid: row.rowid,
            thread_key,
            direction,
            timestamp,
            text: text_cell(&cols.get(row, text.as_ref())),
            media_name,
            raw_cells: row.cells.clone(),
        });
    }
    Ok(out)
}

/// One thread per `chat_list` row, whether or not it has messages.
pub fn parse_chat_list(
    db: &Database<'_>,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<Vec<ChatThread>, ParseError> {
    let table = required_table(db, map, "whatsapp.chat_list.table", store_path, notes)?;
    let mut cols = Columns {
        table,
        missing: Vec::new(),
    };
    let thread = column(map, &mut cols, "whatsapp.chat_list.thread", true, store_path, notes);
    let table_name = cols.table.name.clone();
    let rows = scan_rows(db, &cols.table, store_path, notes)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        match text_cell(&cols.get(row, thread.as_ref())) {
            Some(thread_key) => out.push(ChatThread {
                store_path: store_path.to_string(),
                rowid: row.rowid,
                thread_key,
            }),
            None => notes.drop_row(store_path, &table_name, row.rowid, "empty thread key"),
        }
    }
    Ok(out)
}

/// Contacts from `wa_contacts`.
pub fn parse_contacts(
    db: &Database<'_>,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<Vec<Contact>, ParseError> {
    let table = required_table(db, map, "whatsapp.contacts.table", store_path, notes)?;
    let mut cols = Columns {
        table,
        missing: Vec::new(),
    };
    let ident = column(map, &mut cols, "whatsapp.contacts.identifier", true, store_path, notes);
    let name = column(map, &mut cols, "whatsapp.contacts.name", false, store_path, notes);
    let status = column(map, &mut cols, "whatsapp.contacts.status", false, store_path, notes);
    let table_name = cols.table.name.clone();
    let rows = scan_rows(db, &cols.table, store_path, notes)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        let Some(identifier) = text_cell(&cols.get(row, ident.as_ref())) else {
            notes.drop_row(store_path, &table_name, row.rowid, "empty contact identifier");
            continue;
        };
        out.push(Contact {
            store_path: store_path.to_string(),
            rowid: row.rowid,
            identifier,
            display_name: text_cell(&cols.get(row, name.as_ref())),
            status: text_cell(&cols.get(row, status.as_ref())),
        });
    }
    Ok(out)
}
