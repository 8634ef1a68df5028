//! Viber call log, data and messages databases.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{
    column, note_timestamp, optional_table, required_table, scan_rows, text_cell, Columns,
    Contact, Direction, ParseError, Provenance,
};
use crate::notes::Notes;
use crate::schema_map::SchemaMap;
use crate::sqlite::{CellValue, Database, TableSchema};
use crate::timestamp::{normalize_timestamp, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallDirection {
    Incoming,
    Outgoing,
    Missed,
    Unknown,
}

impl CallDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            CallDirection::Incoming => "incoming",
            CallDirection::Outgoing => "outgoing",
            CallDirection::Missed => "missed",
            CallDirection::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub store_path: String,
    pub rowid: i64,
    pub remote_number: String,
    pub direction: CallDirection,
    /// The type code as stored, kept whatever direction it mapped to.
    pub direction_code: Option<i64>,
    pub start_time: Timestamp,
    pub duration_seconds: u64,
    /// Other rows describing the same call.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub also_recorded_in: Vec<Provenance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_cells: Vec<CellValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViberMessage {
    pub store_path: String,
    pub rowid: i64,
    pub thread_id: i64,
    /// `None` when the thread or its participant could not be found.
    pub remote_number: Option<String>,
    pub direction: Direction,
    pub timestamp: Timestamp,
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_cells: Vec<CellValue>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PerContactSummary {
    pub remote_number: String,
    pub total_calls: u64,
    pub total_call_seconds: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataDb {
    pub contacts: Vec<Contact>,
    pub viber_numbers: Vec<String>,
    pub calls: Vec<CallRecord>,
}

fn call_rows(
    db: &Database<'_>,
    table: TableSchema,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<Vec<CallRecord>, ParseError> {
    let mut cols = Columns {
        table,
        missing: Vec::new(),
    };
    let number = column(map, &mut cols, "viber.call.number", true, store_path, notes);
    let date = column(map, &mut cols, "viber.call.date", true, store_path, notes);
    let duration = column(map, &mut cols, "viber.call.duration", false, store_path, notes);
    let kind = column(map, &mut cols, "viber.call.type", false, store_path, notes);
    let table_name = cols.table.name.clone();

    let incoming = map.codes("viber.call.code.incoming");
    let outgoing = map.codes("viber.call.code.outgoing");
    let missed = map.codes("viber.call.code.missed");
    let millis = map.setting("viber.call.duration_unit").eq_ignore_ascii_case("milliseconds");
    let unit_note = if millis {
        "milliseconds, floored to whole seconds"
    } else {
        "seconds"
    };

    let rows = scan_rows(db, &cols.table, store_path, notes)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        if !cols.missing.is_empty() {
            notes.drop_row(store_path, &table_name, row.rowid, format!("unmapped {}", cols.missing.join(", ")));
            continue;
        }
        let Some(remote_number) = text_cell(&cols.get(row, number.as_ref())) else {
            notes.drop_row(store_path, &table_name, row.rowid, "empty number");
            continue;
        };
        let Some(raw_date) = cols.get(row, date.as_ref()).as_i64() else {
            notes.drop_row(store_path, &table_name, row.rowid, "date missing or not an integer");
            continue;
        };
        let start_time = normalize_timestamp(raw_date);
        note_timestamp(notes, store_path, &table_name, row.rowid, &start_time);

        let duration_seconds = match cols.get(row, duration.as_ref()) {
            CellValue::Null => {
                notes.warn(store_path, Some(row.rowid), "missing-duration", format!("{table_name}: duration absent, taken as 0"));
                0
            }
            v => match v.as_i64() {
                Some(d) if d >= 0 => {
                    notes.assume("viber.call.duration_unit", store_path, format!("{table_name}: {unit_note}"));
                    if millis {
                        d as u64 / 1000
                    } else {
                        d as u64
                    }
                }
                _ => {
                    notes.warn(
                        store_path,
                        Some(row.rowid),
                        "bad-duration",
                        format!("{table_name}: duration {v:?} is not a non-negative integer, taken as 0"),
                    );
                    0
                }
            },
        };

        let direction_code = cols.get(row, kind.as_ref()).as_i64();
        let direction = match direction_code {
            Some(c) if incoming.contains(&c) => CallDirection::Incoming,
            Some(c) if outgoing.contains(&c) => CallDirection::Outgoing,
            Some(c) if missed.contains(&c) => CallDirection::Missed,
            other => {
                notes.warn(
                    store_path,
                    Some(row.rowid),
                    "unknown-call-type",
                    format!("{table_name}: type code {other:?} kept as unknown"),
                );
                CallDirection::Unknown
            }
        };

        out.push(CallRecord {
            store_path: store_path.to_string(),
            rowid: row.rowid,
            remote_number,
            direction,
            direction_code,
            start_time,
            duration_seconds,
            also_recorded_in: Vec::new(),
            raw_cells: row.cells.clone(),
        });
    }
    Ok(out)
}

/// One record per `viber_call_log` row.
pub fn parse_call_log(
    db: &Database<'_>,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<Vec<CallRecord>, ParseError> {
    let table = required_table(db, map, "viber.call_log.table", store_path, notes)?;
    call_rows(db, table, store_path, map, notes)
}

/// Phonebook contacts, Viber numbers and calls from `viber_data`.
/// Each table is optional; a missing one is warned about and skipped.
pub fn parse_data_db(
    db: &Database<'_>,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<DataDb, ParseError> {
    let mut out = DataDb {
        contacts: phonebook(db, store_path, map, notes)?,
        ..DataDb::default()
    };

    if let Some(table) = optional_table(db, map, "viber.data.numbers_table", store_path, notes)? {
        let mut cols = Columns {
            table,
            missing: Vec::new(),
        };
        let number = column(map, &mut cols, "viber.data.numbers.number", true, store_path, notes);
        let table_name = cols.table.name.clone();
        for row in scan_rows(db, &cols.table, store_path, notes)? {
            match text_cell(&cols.get(&row, number.as_ref())) {
                Some(n) => out.viber_numbers.push(n),
                None => notes.drop_row(store_path, &table_name, row.rowid, "empty number"),
            }
        }
    }

    if let Some(table) = optional_table(db, map, "viber.data.calls_table", store_path, notes)? {
        out.calls = call_rows(db, table, store_path, map, notes)?;
    }
    Ok(out)
}

/// Join phonebook_contact -> phonebook_raw_contact -> phonebook_data.
/// A contact with several numbers yields one [`Contact`] per number.
fn phonebook(
    db: &Database<'_>,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<Vec<Contact>, ParseError> {
    let contact_t = optional_table(db, map, "viber.phonebook.contact_table", store_path, notes)?;
    let raw_t = optional_table(db, map, "viber.phonebook.raw_table", store_path, notes)?;
    let data_t = optional_table(db, map, "viber.phonebook.data_table", store_path, notes)?;
    let Some(contact_t) = contact_t else {
        return Ok(Vec::new());
    };

    // raw id -> numbers
    let mut numbers: HashMap<i64, Vec<String>> = HashMap::new();
    if let Some(table) = data_t {
        let mut cols = Columns {
            table,
            missing: Vec::new(),
        };
        let raw_id = column(map, &mut cols, "viber.phonebook.data.raw_id", true, store_path, notes);
        let number = column(map, &mut cols, "viber.phonebook.data.number", true, store_path, notes);
        for row in scan_rows(db, &cols.table, store_path, notes)? {
            if let (Some(r), Some(n)) = (
                cols.get(&row, raw_id.as_ref()).as_i64(),
                text_cell(&cols.get(&row, number.as_ref())),
            ) {
                let list = numbers.entry(r).or_default();
                if !list.contains(&n) {
                    list.push(n);
                }
            }
        }
    }

    // contact id -> raw ids
    let mut raws: HashMap<i64, Vec<i64>> = HashMap::new();
    if let Some(table) = raw_t {
        let mut cols = Columns {
            table,
            missing: Vec::new(),
        };
        let id = column(map, &mut cols, "viber.phonebook.raw.id", true, store_path, notes);
        let contact_id = column(map, &mut cols, "viber.phonebook.raw.contact_id", true, store_path, notes);
        for row in scan_rows(db, &cols.table, store_path, notes)? {
            if let (Some(r), Some(c)) = (
                cols.get(&row, id.as_ref()).as_i64(),
                cols.get(&row, contact_id.as_ref()).as_i64(),
            ) {
                raws.entry(c).or_default().push(r);
            }
        }
    }

    let mut cols = Columns {
        table: contact_t,
        missing: Vec::new(),
    };
    let id = column(map, &mut cols, "viber.phonebook.contact.id", true, store_path, notes);
    let name = column(map, &mut cols, "viber.phonebook.contact.name", false, store_path, notes);
    let table_name = cols.table.name.clone();
    let mut out = Vec::new();
    for row in scan_rows(db, &cols.table, store_path, notes)? {
        let Some(cid) = cols.get(&row, id.as_ref()).as_i64() else {
            notes.drop_row(store_path, &table_name, row.rowid, "contact id missing");
            continue;
        };
        let display_name = text_cell(&cols.get(&row, name.as_ref()));
        let mut found: Vec<&String> = Vec::new();
        for r in raws.get(&cid).into_iter().flatten() {
            for n in numbers.get(r).into_iter().flatten() {
                if !found.contains(&n) {
                    found.push(n);
                }
            }
        }
        if found.is_empty() {
            notes.drop_row(store_path, &table_name, row.rowid, "no phone number linked through the raw contact");
            continue;
        }
        for n in found {
            out.push(Contact {
                store_path: store_path.to_string(),
                rowid: row.rowid,
                identifier: n.clone(),
                display_name: display_name.clone(),
                status: None,
            });
        }
    }
    Ok(out)
}

/// Merge calls that several stores record, keyed on (number, start time).
///
/// Earlier records absorb later ones from a different store; the absorbed
/// row is listed in `also_recorded_in`. Rows repeated within one store are
/// kept apart. Applying this twice changes nothing.
pub fn dedupe_calls(calls: Vec<CallRecord>, notes: &mut Notes) -> Vec<CallRecord> {
    let mut out: Vec<CallRecord> = Vec::with_capacity(calls.len());
    let mut seen: HashMap<(String, i64), Vec<usize>> = HashMap::new();
    for call in calls {
        let key = (call.remote_number.clone(), call.start_time.epoch_millis());
        let slots = seen.entry(key).or_default();
        let target = slots.iter().copied().find(|&i| {
            let kept = &out[i];
            kept.store_path != call.store_path
                && kept.also_recorded_in.iter().all(|p| p.store_path != call.store_path)
        });
        match target {
            Some(i) => {
                let kept = &mut out[i];
                if kept.duration_seconds != call.duration_seconds || kept.direction != call.direction {
                    notes.warn(
                        &call.store_path,
                        Some(call.rowid),
                        "call-conflict",
                        format!(
                            "same call as {}#{} but duration/direction differ ({} s {} vs {} s {}); first kept",
                            kept.store_path,
                            kept.rowid,
                            kept.duration_seconds,
                            kept.direction.as_str(),
                            call.duration_seconds,
                            call.direction.as_str()
                        ),
                    );
                }
                kept.also_recorded_in.push(Provenance {
                    store_path: call.store_path,
                    rowid: call.rowid,
                });
                kept.also_recorded_in.extend(call.also_recorded_in);
                kept.also_recorded_in.sort();
            }
            None => {
                slots.push(out.len());
                out.push(call);
            }
        }
    }
    out
}

/// Messages joined through threads and participants to a remote number.
pub fn parse_messages_db(
    db: &Database<'_>,
    store_path: &str,
    map: &SchemaMap,
    notes: &mut Notes,
) -> Result<Vec<ViberMessage>, ParseError> {
    let messages_t = required_table(db, map, "viber.messages.table", store_path, notes)?;

    let mut threads: Option<Vec<i64>> = None;
    if let Some(table) = optional_table(db, map, "viber.threads.table", store_path, notes)? {
        let mut cols = Columns {
            table,
            missing: Vec::new(),
        };
        let id = column(map, &mut cols, "viber.threads.id", true, store_path, notes);
        let mut ids = Vec::new();
        if id.is_some() {
            for row in scan_rows(db, &cols.table, store_path, notes)? {
                ids.extend(cols.get(&row, id.as_ref()).as_i64());
            }
            threads = Some(ids);
        }
    }

    // thread id -> participant numbers in row order
    let mut participants: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    if let Some(table) = optional_table(db, map, "viber.participants.table", store_path, notes)? {
        let mut cols = Columns {
            table,
            missing: Vec::new(),
        };
        let thread = column(map, &mut cols, "viber.participants.thread", true, store_path, notes);
        let number = column(map, &mut cols, "viber.participants.number", true, store_path, notes);
        for row in scan_rows(db, &cols.table, store_path, notes)? {
            if let (Some(t), Some(n)) = (
                cols.get(&row, thread.as_ref()).as_i64(),
                text_cell(&cols.get(&row, number.as_ref())),
            ) {
                let list = participants.entry(t).or_default();
                if !list.contains(&n) {
                    list.push(n);
                }
            }
        }
    }

    let mut cols = Columns {
        table: messages_t,
        missing: Vec::new(),
    };
    let thread = column(map, &mut cols, "viber.messages.thread", true, store_path, notes);
    let date = column(map, &mut cols, "viber.messages.date", true, store_path, notes);
    let send_type = column(map, &mut cols, "viber.messages.direction", true, store_path, notes);
    let text = column(map, &mut cols, "viber.messages.text", false, store_path, notes);
    let table_name = cols.table.name.clone();
    let outgoing = map.codes("viber.messages.code.outgoing");
    let incoming = map.codes("viber.messages.code.incoming");

    let rows = scan_rows(db, &cols.table, store_path, notes)?;
    let mut out = Vec::with_capacity(rows.len());
    for row in &rows {
        if !cols.missing.is_empty() {
            notes.drop_row(store_path, &table_name, row.rowid, format!("unmapped {}", cols.missing.join(", ")));
            continue;
        }
        let Some(thread_id) = cols.get(row, thread.as_ref()).as_i64() else {
            notes.drop_row(store_path, &table_name, row.rowid, "thread id missing");
            continue;
        };
        let direction = match cols.get(row, send_type.as_ref()).as_i64() {
            Some(c) if outgoing.contains(&c) => Direction::Outgoing,
            Some(c) if incoming.contains(&c) => Direction::Incoming,
            other => {
                notes.drop_row(store_path, &table_name, row.rowid, format!("direction code {other:?} not mapped"));
                continue;
            }
        };
        let Some(raw_date) = cols.get(row, date.as_ref()).as_i64() else {
            notes.drop_row(store_path, &table_name, row.rowid, "date missing or not an integer");
            continue;
        };
        let timestamp = normalize_timestamp(raw_date);
        note_timestamp(notes, store_path, &table_name, row.rowid, &timestamp);

        let remote_number = if threads.as_ref().is_some_and(|ids| !ids.contains(&thread_id)) {
            notes.warn(
                store_path,
                Some(row.rowid),
                "orphan-thread",
                format!("{table_name}: thread {thread_id} not in the threads table"),
            );
            None
        } else {
            match participants.get(&thread_id).map(Vec::as_slice) {
                Some([only]) => Some(only.clone()),
                Some([first, rest @ ..]) => {
                    notes.assume(
                        "viber.participants.number",
                        store_path,
                        "thread with several participants attributed to its first participant",
                    );
                    notes.warn(
                        store_path,
                        Some(row.rowid),
                        "multi-participant-thread",
                        format!("{table_name}: thread {thread_id} also has {}", rest.join(", ")),
                    );
                    Some(first.clone())
                }
                _ => {
                    notes.warn(
                        store_path,
                        Some(row.rowid),
                        "unresolved-participant",
                        format!("{table_name}: thread {thread_id} has no participant number"),
                    );
                    None
                }
            }
        };

        out.push(ViberMessage {
            store_path: store_path.to_string(),
            rowid: row.rowid,
            thread_id,
            remote_number,
            direction,
            timestamp,
            text: text_cell(&cols.get(row, text.as_ref())),
            raw_cells: row.cells.clone(),
        });
    }
    Ok(out)
}

/// Per-number totals, sorted by number. Messages without a resolved number
/// are not attributed to anyone.
pub fn summarize_contact_activity(
    calls: &[CallRecord],
    messages: &[ViberMessage],
) -> Vec<PerContactSummary> {
    fn slot<'m, 'a>(
        map: &'m mut BTreeMap<&'a str, PerContactSummary>,
        n: &'a str,
    ) -> &'m mut PerContactSummary {
        map.entry(n).or_insert_with(|| PerContactSummary {
            remote_number: n.to_string(),
            ..Default::default()
        })
    }

    let mut by_number: BTreeMap<&str, PerContactSummary> = BTreeMap::new();
    for c in calls {
        let s = slot(&mut by_number, &c.remote_number);
        s.total_calls += 1;
        s.total_call_seconds += c.duration_seconds;
    }
    for m in messages {
        let Some(n) = m.remote_number.as_deref() else {
            continue;
        };
        let s = slot(&mut by_number, n);
        match m.direction {
            Direction::Outgoing => s.messages_sent += 1,
            Direction::Incoming => s.messages_received += 1,
        }
    }
    by_number.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn call(store: usize, rowid: i64, number: u8, start: i64, secs: u64) -> CallRecord {
        CallRecord {
            store_path: format!("store{store}"),
            rowid,
            remote_number: format!("+1555000{number:04}"),
            direction: CallDirection::Incoming,
            direction_code: Some(1),
            start_time: normalize_timestamp(start),
            duration_seconds: secs,
            also_recorded_in: Vec::new(),
            raw_cells: Vec::new(),
        }
    }

    fn calls() -> impl Strategy<Value = Vec<CallRecord>> {
        prop::collection::vec((0usize..3, 0u8..4, 0i64..4, 0u64..600), 0..40).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (s, n, t, d))| call(s, i as i64, n, 1_357_041_600 + t * 60, d))
                .collect()
        })
    }

    fn messages() -> impl Strategy<Value = Vec<ViberMessage>> {
        prop::collection::vec((0u8..5, any::<bool>()), 0..40).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (n, out))| ViberMessage {
                    store_path: "m".into(),
                    rowid: i as i64,
                    thread_id: n as i64,
                    remote_number: (n < 4).then(|| format!("+1555000{n:04}")),
                    direction: if out { Direction::Outgoing } else { Direction::Incoming },
                    timestamp: normalize_timestamp(1_357_041_600),
                    text: None,
                    raw_cells: Vec::new(),
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn summaries_conserve_counts(cs in calls(), ms in messages()) {
            let merged = dedupe_calls(cs, &mut Notes::default());
            let summary = summarize_contact_activity(&merged, &ms);
            prop_assert_eq!(summary.iter().map(|s| s.total_calls).sum::<u64>(), merged.len() as u64);
            prop_assert_eq!(
                summary.iter().map(|s| s.total_call_seconds).sum::<u64>(),
                merged.iter().map(|c| c.duration_seconds).sum::<u64>()
            );
            let attributed = ms.iter().filter(|m| m.remote_number.is_some());
            let (sent, recv) = attributed.fold((0, 0), |(s, r), m| match m.direction {
                Direction::Outgoing => (s + 1, r),
                Direction::Incoming => (s, r + 1),
            });
            prop_assert_eq!(summary.iter().map(|s| s.messages_sent).sum::<u64>(), sent);
            prop_assert_eq!(summary.iter().map(|s| s.messages_received).sum::<u64>(), recv);
            prop_assert!(summary.windows(2).all(|w| w[0].remote_number < w[1].remote_number));
        }

        #[test]
        fn dedupe_is_idempotent(cs in calls()) {
            let total = cs.len();
            let once = dedupe_calls(cs, &mut Notes::default());
            let twice = dedupe_calls(once.clone(), &mut Notes::default());
            prop_assert_eq!(&twice, &once);
            // no row is lost: every input row is a record or listed as a duplicate
            let kept: usize = once.iter().map(|c| 1 + c.also_recorded_in.len()).sum();
            prop_assert_eq!(kept, total);
        }
    }
}
