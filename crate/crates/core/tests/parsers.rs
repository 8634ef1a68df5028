//! WhatsApp and Viber decoding over databases built by the reference engine.

use imtriage_core::model::{Direction, ParseError, UNMAPPED_ROW};
use imtriage_core::notes::Notes;
use imtriage_core::schema_map::SchemaMap;
use imtriage_core::sqlite::Database;
use imtriage_core::timestamp::EpochUnit;
use imtriage_core::viber::{
    dedupe_calls, parse_call_log, parse_data_db, parse_messages_db, summarize_contact_activity,
    CallDirection,
};
use imtriage_core::whatsapp::{parse_chat_list, parse_contacts, parse_messages};
use rusqlite::Connection;
use tempfile::TempDir;

fn build(sql: &str) -> Vec<u8> {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("t.db");
    Connection::open(&path).unwrap().execute_batch(sql).unwrap();
    std::fs::read(path).unwrap()
}

const MSGSTORE: &str = "
CREATE TABLE chat_list (_id INTEGER PRIMARY KEY AUTOINCREMENT, key_remote_jid TEXT UNIQUE);
CREATE TABLE messages (_id INTEGER PRIMARY KEY AUTOINCREMENT, key_remote_jid TEXT NOT NULL,
  key_from_me INTEGER, data TEXT, timestamp INTEGER, media_name TEXT, media_url TEXT);
INSERT INTO chat_list (key_remote_jid) VALUES ('15550001111@s.whatsapp.net'), ('15550003333@s.whatsapp.net');
INSERT INTO messages (key_remote_jid, key_from_me, data, timestamp, media_name, media_url) VALUES
  ('15550001111@s.whatsapp.net', 1, 'hello', 1357041600000, NULL, NULL),
  ('15550001111@s.whatsapp.net', 0, 'hi back', 1357041660500, NULL, NULL),
  ('15550001111@s.whatsapp.net', 1, NULL, 1357041720000, 'IMG-20130101-WA0001.jpg', NULL),
  ('15550001111@s.whatsapp.net', 0, NULL, 1357041780000, NULL, 'https://mmg.example.net/d/f/AUD-20130101-WA0002.opus'),
  ('15550001111@s.whatsapp.net', 2, 'odd flag', 1357041840000, NULL, NULL),
  ('15550001111@s.whatsapp.net', 1, 'seconds', 1357041900, NULL, NULL);
";

#[test]
fn whatsapp_messages_decode() {
    let bytes = build(MSGSTORE);
    let db = Database::open(&bytes).unwrap();
    let map = SchemaMap::default();
    let mut notes = Notes::default();
    let msgs = parse_messages(&db, "msgstore.db", &map, &mut notes).unwrap();

    let got: Vec<_> = msgs
        .iter()
        .map(|m| {
            (
                m.rowid,
                m.direction,
                m.text.as_deref(),
                m.timestamp.utc.as_str(),
                m.media_name.as_deref(),
            )
        })
        .collect();
    assert_eq!(
        got,
        [
            (1, Direction::Outgoing, Some("hello"), "2013-01-01T12:00:00Z", None),
            (2, Direction::Incoming, Some("hi back"), "2013-01-01T12:01:00.500Z", None),
            (3, Direction::Outgoing, None, "2013-01-01T12:02:00Z", Some("IMG-20130101-WA0001.jpg")),
            (4, Direction::Incoming, None, "2013-01-01T12:03:00Z", Some("AUD-20130101-WA0002.opus")),
            (6, Direction::Outgoing, Some("seconds"), "2013-01-01T12:05:00Z", None),
        ]
    );
    assert_eq!(msgs[4].timestamp.unit, EpochUnit::Seconds);
    assert!(msgs.iter().all(|m| m.thread_key == "15550001111@s.whatsapp.net"));

    // every row is a record or a dropped-row warning
    assert_eq!(msgs.len() + notes.dropped_rows("msgstore.db", "messages"), 6);
    let dropped: Vec<_> = notes.warnings.iter().filter(|w| w.code == UNMAPPED_ROW).collect();
    assert_eq!(dropped[0].rowid, Some(5));

    let keys: Vec<_> = notes.assumptions.iter().map(|a| a.key.as_str()).collect();
    assert!(keys.contains(&"timestamp.unit"));
    assert!(keys.contains(&"whatsapp.messages.media_name"));
    assert!(keys.contains(&"whatsapp.sqlite_sequence"));
}

#[test]
fn chat_list_includes_threads_without_messages() {
    let bytes = build(MSGSTORE);
    let db = Database::open(&bytes).unwrap();
    let mut notes = Notes::default();
    let threads = parse_chat_list(&db, "m", &SchemaMap::default(), &mut notes).unwrap();
    let keys: Vec<_> = threads.iter().map(|t| t.thread_key.as_str()).collect();
    assert_eq!(keys, ["15550001111@s.whatsapp.net", "15550003333@s.whatsapp.net"]);
}

#[test]
fn renamed_column_needs_override() {
    let sql = MSGSTORE
        .replace("data TEXT", "body TEXT")
        .replace("(key_remote_jid, key_from_me, data,", "(key_remote_jid, key_from_me, body,");
    let bytes = build(&sql);
    let db = Database::open(&bytes).unwrap();

    // text is optional, so the default map still yields rows, just without text
    let mut notes = Notes::default();
    let plain = parse_messages(&db, "m", &SchemaMap::default(), &mut notes).unwrap();
    assert!(plain.iter().all(|m| m.text.is_none()));

    let map = SchemaMap::parse("whatsapp.messages.text = data, body\n").unwrap();
    let mut notes = Notes::default();
    let msgs = parse_messages(&db, "m", &map, &mut notes).unwrap();
    assert_eq!(msgs[0].text.as_deref(), Some("hello"));
    assert!(notes
        .assumptions
        .iter()
        .any(|a| a.detail == "column messages.body (override fallback)"));
}

#[test]
fn missing_required_column_drops_every_row_with_warnings() {
    let sql = MSGSTORE
        .replace("key_from_me INTEGER", "from_me INTEGER")
        .replace("(key_remote_jid, key_from_me,", "(key_remote_jid, from_me,");
    let bytes = build(&sql);
    let db = Database::open(&bytes).unwrap();
    let mut notes = Notes::default();
    let msgs = parse_messages(&db, "m", &SchemaMap::default(), &mut notes).unwrap();
    assert!(msgs.is_empty());
    assert_eq!(notes.dropped_rows("m", "messages"), 6);
    assert!(notes.warnings.iter().any(|w| w.code == "unmapped-column"));
}

#[test]
fn missing_messages_table_is_an_error() {
    let bytes = build("CREATE TABLE android_metadata (locale TEXT);");
    let db = Database::open(&bytes).unwrap();
    let err = parse_messages(&db, "m", &SchemaMap::default(), &mut Notes::default()).unwrap_err();
    assert!(matches!(err, ParseError::MissingTable { ref available, .. } if available == &["android_metadata"]));
}

#[test]
fn whatsapp_contacts() {
    let bytes = build(
        "CREATE TABLE wa_contacts (_id INTEGER PRIMARY KEY, jid TEXT, display_name TEXT, status TEXT);
         INSERT INTO wa_contacts (jid, display_name, status) VALUES
           ('15550001111@s.whatsapp.net', 'Alex Example', 'Available'),
           ('15550003333@s.whatsapp.net', NULL, NULL),
           (NULL, 'ghost', NULL);",
    );
    let db = Database::open(&bytes).unwrap();
    let mut notes = Notes::default();
    let contacts = parse_contacts(&db, "wa.db", &SchemaMap::default(), &mut notes).unwrap();
    assert_eq!(contacts.len(), 2);
    assert_eq!(contacts[0].display_name.as_deref(), Some("Alex Example"));
    assert_eq!(contacts[0].status.as_deref(), Some("Available"));
    assert_eq!(contacts[1].display_name, None);
    assert_eq!(notes.dropped_rows("wa.db", "wa_contacts"), 1);
}

const CALL_LOG: &str = "
CREATE TABLE viber_call_log (_id INTEGER PRIMARY KEY, number TEXT, date INTEGER, duration INTEGER, type INTEGER);
INSERT INTO viber_call_log (number, date, duration, type) VALUES
  ('+15550001111', 1357041600, 120, 2),
  ('+15550004444', 1357045200000, 60, 1),
  ('+15550004444', 1357048800000, 30, 2),
  ('+15550005555', 1357052400000, 0, 3),
  ('+15550005555', 1357056000000, 5, 9);
";

#[test]
fn call_log_records() {
    let bytes = build(CALL_LOG);
    let db = Database::open(&bytes).unwrap();
    let mut notes = Notes::default();
    let calls = parse_call_log(&db, "viber_call_log.db", &SchemaMap::default(), &mut notes).unwrap();
    assert_eq!(calls.len(), 5);
    assert_eq!(calls[0].duration_seconds, 120);
    assert_eq!(calls[0].direction, CallDirection::Outgoing);
    assert_eq!(calls[0].start_time.utc, "2013-01-01T12:00:00Z");
    assert_eq!(calls[3].direction, CallDirection::Missed);
    assert_eq!(calls[4].direction, CallDirection::Unknown);
    assert_eq!(calls[4].direction_code, Some(9));
    assert!(notes.warnings.iter().any(|w| w.code == "unknown-call-type" && w.rowid == Some(5)));

    let summary = summarize_contact_activity(&calls, &[]);
    let s = summary.iter().find(|s| s.remote_number == "+15550004444").unwrap();
    assert_eq!((s.total_calls, s.total_call_seconds), (2, 90));
    let numbers: Vec<_> = summary.iter().map(|s| s.remote_number.as_str()).collect();
    assert_eq!(numbers, ["+15550001111", "+15550004444", "+15550005555"]);
}

#[test]
fn empty_call_log() {
    let bytes = build(
        "CREATE TABLE viber_call_log (_id INTEGER PRIMARY KEY, number TEXT, date INTEGER, duration INTEGER, type INTEGER);",
    );
    let db = Database::open(&bytes).unwrap();
    let calls = parse_call_log(&db, "c", &SchemaMap::default(), &mut Notes::default()).unwrap();
    assert!(calls.is_empty());
    assert!(summarize_contact_activity(&calls, &[]).is_empty());
}

#[test]
fn duration_unit_override() {
    let bytes = build(
        "CREATE TABLE viber_call_log (_id INTEGER PRIMARY KEY, number TEXT, date INTEGER, duration INTEGER, type INTEGER);
         INSERT INTO viber_call_log (number, date, duration, type) VALUES ('+15550001111', 1357041600, 90500, 1);",
    );
    let db = Database::open(&bytes).unwrap();
    let map = SchemaMap::parse("viber.call.duration_unit = milliseconds").unwrap();
    let calls = parse_call_log(&db, "c", &map, &mut Notes::default()).unwrap();
    assert_eq!(calls[0].duration_seconds, 90);
}

const DATA_DB: &str = "
CREATE TABLE phonebook_contact (_id INTEGER PRIMARY KEY, display_name TEXT);
CREATE TABLE phonebook_raw_contact (_id INTEGER PRIMARY KEY, contact_id INTEGER);
CREATE TABLE phonebook_data (_id INTEGER PRIMARY KEY, raw_id INTEGER, data1 TEXT);
CREATE TABLE \"Viber numbers\" (_id INTEGER PRIMARY KEY, number TEXT);
CREATE TABLE Calls (_id INTEGER PRIMARY KEY, number TEXT, date INTEGER, duration INTEGER, type INTEGER);
INSERT INTO phonebook_contact VALUES (10, 'Alex Example'), (11, 'Sam Sample'), (12, 'No Number');
INSERT INTO phonebook_raw_contact VALUES (100, 10), (101, 11), (102, 12);
INSERT INTO phonebook_data VALUES (1, 100, '+15550001111'), (2, 101, '+15550004444');
INSERT INTO \"Viber numbers\" (number) VALUES ('+15550001111'), ('+15550004444');
INSERT INTO Calls (number, date, duration, type) VALUES
  ('+15550001111', 1357041600, 120, 2),
  ('+15550006666', 1357060000, 15, 1);
";

#[test]
fn data_db_join_and_numbers() {
    let bytes = build(DATA_DB);
    let db = Database::open(&bytes).unwrap();
    let mut notes = Notes::default();
    let data = parse_data_db(&db, "viber_data", &SchemaMap::default(), &mut notes).unwrap();
    let contacts: Vec<_> = data
        .contacts
        .iter()
        .map(|c| (c.display_name.as_deref().unwrap(), c.identifier.as_str()))
        .collect();
    assert_eq!(contacts, [("Alex Example", "+15550001111"), ("Sam Sample", "+15550004444")]);
    assert_eq!(data.viber_numbers, ["+15550001111", "+15550004444"]);
    assert_eq!(data.calls.len(), 2);
    assert_eq!(notes.dropped_rows("viber_data", "phonebook_contact"), 1);
}

#[test]
fn data_db_with_only_metadata() {
    let bytes = build("CREATE TABLE android_metadata (locale TEXT); INSERT INTO android_metadata VALUES ('en_US');");
    let db = Database::open(&bytes).unwrap();
    let mut notes = Notes::default();
    let data = parse_data_db(&db, "viber_data", &SchemaMap::default(), &mut notes).unwrap();
    assert!(data.contacts.is_empty() && data.viber_numbers.is_empty() && data.calls.is_empty());
    let missing = notes.warnings.iter().filter(|w| w.code == "missing-table").count();
    assert_eq!(missing, 5);
}

#[test]
fn duplicated_call_reported_once() {
    let log_bytes = build(CALL_LOG);
    let data_bytes = build(DATA_DB);
    let map = SchemaMap::default();
    let mut notes = Notes::default();
    let mut calls = parse_call_log(&Database::open(&log_bytes).unwrap(), "viber_call_log.db", &map, &mut notes).unwrap();
    calls.extend(parse_data_db(&Database::open(&data_bytes).unwrap(), "viber_data", &map, &mut notes).unwrap().calls);
    assert_eq!(calls.len(), 7);

    let merged = dedupe_calls(calls, &mut notes);
    assert_eq!(merged.len(), 6);
    let first = &merged[0];
    assert_eq!(first.store_path, "viber_call_log.db");
    assert_eq!(first.also_recorded_in.len(), 1);
    assert_eq!(first.also_recorded_in[0].store_path, "viber_data");

    let again = dedupe_calls(merged.clone(), &mut notes);
    assert_eq!(again, merged);
    assert_eq!(summarize_contact_activity(&again, &[]), summarize_contact_activity(&merged, &[]));
}

const MESSAGES_DB: &str = "
CREATE TABLE threads (_id INTEGER PRIMARY KEY);
CREATE TABLE participants (_id INTEGER PRIMARY KEY, thread_id INTEGER, number TEXT);
CREATE TABLE messages (_id INTEGER PRIMARY KEY AUTOINCREMENT, thread_id INTEGER, body TEXT, date INTEGER, send_type INTEGER);
INSERT INTO threads VALUES (1), (2);
INSERT INTO participants (thread_id, number) VALUES (1, '+15550002222');
INSERT INTO messages (thread_id, body, date, send_type) VALUES
  (1, 'first', 1357041600000, 1),
  (1, 'second', 1357041700000, 1),
  (1, 'reply', 1357041800000, 0),
  (7, 'lost thread', 1357041900000, 0),
  (2, 'nobody', 1357042000000, 1);
";

#[test]
fn viber_messages_resolve_numbers() {
    let bytes = build(MESSAGES_DB);
    let db = Database::open(&bytes).unwrap();
    let mut notes = Notes::default();
    let msgs = parse_messages_db(&db, "viber_messages", &SchemaMap::default(), &mut notes).unwrap();
    assert_eq!(msgs.len(), 5);
    let resolved: Vec<_> = msgs
        .iter()
        .filter(|m| m.remote_number.as_deref() == Some("+15550002222"))
        .collect();
    assert_eq!(resolved.len(), 3);
    assert_eq!(resolved.iter().filter(|m| m.direction == Direction::Outgoing).count(), 2);
    assert!(msgs.iter().all(|m| !m.timestamp.utc.is_empty()));

    assert_eq!(msgs[3].remote_number, None);
    assert!(notes.warnings.iter().any(|w| w.code == "orphan-thread" && w.rowid == Some(4)));
    assert!(notes.warnings.iter().any(|w| w.code == "unresolved-participant" && w.rowid == Some(5)));

    let summary = summarize_contact_activity(&[], &msgs);
    assert_eq!(summary.len(), 1);
    assert_eq!((summary[0].messages_sent, summary[0].messages_received), (2, 1));
}

#[test]
fn empty_viber_messages() {
    let bytes = build("CREATE TABLE messages (_id INTEGER PRIMARY KEY, thread_id INTEGER, body TEXT, date INTEGER, send_type INTEGER);");
    let db = Database::open(&bytes).unwrap();
    let msgs = parse_messages_db(&db, "v", &SchemaMap::default(), &mut Notes::default()).unwrap();
    assert!(msgs.is_empty());
}
