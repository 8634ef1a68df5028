//! Scenario to SQL scripts, file layout and the expected report.
//!
//! The expected report is assembled from the scenario's own ground truth,
//! never by running the parsers, so comparing the two is a real check.

use std::collections::{BTreeMap, BTreeSet};

use imtriage_core::locator::{App, ArtifactStore, Confidence, StoreKind};
use imtriage_core::media::{EncryptedBackupRef, MediaRef, RefStatus};
use imtriage_core::model::{Contact, Direction, Provenance};
use imtriage_core::notes::Assumption;
use imtriage_core::pipeline::DEFAULT_CASE_ID;
use imtriage_core::report::{
    CaseReport, EventKind, TimelineEvent, ViberSection, WhatsAppSection, REPORT_FORMAT,
};
use imtriage_core::timestamp::{EpochUnit, Timestamp};
use imtriage_core::viber::{CallDirection, CallRecord, PerContactSummary, ViberMessage};
use imtriage_core::whatsapp::{ChatMessage, ChatThread};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::scenario::{CallKind, Scenario, ScenarioError};
use crate::sql::{Script, Value};

pub const MSGSTORE: &str = "data/data/com.whatsapp/databases/msgstore.db";
pub const WA_DB: &str = "data/data/com.whatsapp/databases/wa.db";
pub const CALL_LOG: &str = "data/data/com.viber.voip/databases/viber_call_log.db";
pub const VIBER_DATA: &str = "data/data/com.viber.voip/databases/viber_data";
pub const VIBER_MESSAGES: &str = "data/data/com.viber.voip/databases/viber_messages";
pub const MEDIA_DIR: &str = "mnt/sdcard/WhatsApp/Media";
pub const AVATAR_DIR: &str = "data/data/com.whatsapp/files/Avatars";
pub const BACKUP_DIR: &str = "mnt/sdcard/WhatsApp/Databases";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    /// Built by running the store's script.
    Sqlite,
    Bytes(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutEntry {
    pub path: String,
    pub content: Content,
}

/// One WhatsApp message as enacted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct WaTruth {
    pub thread_key: String,
    pub direction: Direction,
    pub text: Option<String>,
    pub timestamp_utc: String,
    pub media_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallTruth {
    pub number: String,
    pub direction: CallKind,
    pub duration_seconds: u32,
    pub start_epoch_seconds: i64,
    pub in_data_db: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextTruth {
    pub number: String,
    pub outgoing: bool,
    pub epoch_millis: i64,
    pub body: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub whatsapp: Vec<WaTruth>,
    pub calls: Vec<CallTruth>,
    pub texts: Vec<TextTruth>,
}

#[derive(Debug, Clone)]
pub struct Generated {
    /// Store path to its SQL script.
    pub scripts: BTreeMap<String, String>,
    /// Every file of the tree, sorted by path.
    pub layout: Vec<LayoutEntry>,
    /// Complete except for `manifest_digest`, which depends on engine output.
    pub expected: CaseReport,
    pub truth: GroundTruth,
}

const PHRASES: &[&str] = &[
    "Running late, be there in 10",
    "Did you get the file?",
    "Café at 3?",
    "ok 👍",
    "Call me when you're free",
    "Thanks!",
    "Meeting moved to Thursday",
    "Sure, see you there",
    "Can't talk now",
    "Where are you?",
];

/// `YYYY-MM-DDTHH:MM:SS[.mmm]Z` by the days-from-civil inverse.
pub fn civil_utc(ms: i64) -> String {
    let (y, m, d) = civil_date(ms.div_euclid(86_400_000));
    let sod = ms.div_euclid(1000).rem_euclid(86_400);
    let frac = ms.rem_euclid(1000);
    let base = format!(
        "{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}",
        sod / 3600,
        sod % 3600 / 60,
        sod % 60
    );
    if frac == 0 {
        format!("{base}Z")
    } else {
        format!("{base}.{frac:03}Z")
    }
}

fn civil_date(days: i64) -> (i64, i64, i64) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    (yoe + era * 400 + i64::from(m <= 2), m, d)
}

fn yyyymmdd(ms: i64) -> String {
    let (y, m, d) = civil_date(ms.div_euclid(86_400_000));
    format!("{y:04}{m:02}{d:02}")
}

fn stamp(raw: i64) -> Timestamp {
    let unit = if raw >= 1_000_000_000_000 {
        EpochUnit::Milliseconds
    } else {
        EpochUnit::Seconds
    };
    let ms = if unit == EpochUnit::Seconds { raw * 1000 } else { raw };
    Timestamp {
        utc: civil_utc(ms),
        raw,
        unit,
        implausible: false,
    }
}

pub fn jid(number: &str) -> String {
    format!("{}@s.whatsapp.net", number.trim_start_matches('+'))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WaKind {
    Text,
    Photo,
    Video,
    Contact,
    Audio,
}

impl WaKind {
    fn wa_type(self) -> i64 {
        match self {
            WaKind::Text => 0,
            WaKind::Photo => 1,
            WaKind::Audio => 2,
            WaKind::Video => 3,
            WaKind::Contact => 4,
        }
    }

    /// (name prefix, extension, folder, mime type, leading bytes)
    fn media(self) -> Option<(&'static str, &'static str, &'static str, &'static str, &'static [u8])> {
        match self {
            WaKind::Photo => Some(("IMG", "jpg", "WhatsApp Images", "image/jpeg", b"\xff\xd8\xff\xe0\0\x10JFIF\0")),
            WaKind::Video => Some(("VID", "mp4", "WhatsApp Video", "video/mp4", b"\0\0\0\x18ftypmp42")),
            WaKind::Audio => Some(("AUD", "aac", "WhatsApp Audio", "audio/aac", b"\xff\xf1\x50\x80")),
            _ => None,
        }
    }
}

struct Clock {
    start: i64,
    end: i64,
    used: BTreeSet<i64>,
}

impl Clock {
    /// A whole second in range not handed out before.
    fn second(&mut self, rng: &mut ChaCha8Rng) -> i64 {
        loop {
            let s = rng.gen_range(self.start..=self.end);
            if self.used.insert(s) {
                return s;
            }
        }
    }
}

fn random_bytes(rng: &mut ChaCha8Rng, prefix: &[u8], len: usize) -> Vec<u8> {
    let mut v = prefix.to_vec();
    while v.len() < len {
        v.push(rng.gen());
    }
    v
}

fn token(rng: &mut ChaCha8Rng, len: usize) -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect()
}

fn vcard(name: &str, number: &str) -> String {
    format!("BEGIN:VCARD\nVERSION:3.0\nN:;{name};;;\nFN:{name}\nTEL;type=CELL;waid={}:{number}\nEND:VCARD", number.trim_start_matches('+'))
}

#[derive(Default)]
struct Expected {
    assumptions: BTreeSet<Assumption>,
}

impl Expected {
    fn assume(&mut self, key: &str, store: &str, detail: impl Into<String>) {
        self.assumptions.insert(Assumption {
            key: key.into(),
            store_path: store.into(),
            detail: detail.into(),
        });
    }

    fn table(&mut self, key: &str, store: &str, table: &str) {
        self.assume(key, store, format!("table {table} (default)"));
    }

    fn column(&mut self, key: &str, store: &str, table: &str, column: &str) {
        self.assume(key, store, format!("column {table}.{column} (default)"));
    }
}

struct WaRow {
    millis: i64,
    actor: usize,
    outgoing: bool,
    kind: WaKind,
}

pub fn generate_scenario(s: &Scenario) -> Result<Generated, ScenarioError> {
    s.validate()?;
    let (start, end) = s.range()?;
    let w = &s.whatsapp;
    let v = &s.viber;
    let wa_total: u64 = [
        w.chats_sent, w.chats_received, w.photos_sent, w.photos_received, w.videos_sent,
        w.videos_received, w.contacts_sent, w.contacts_received, w.audio_sent, w.audio_received,
    ]
    .iter()
    .map(|&n| u64::from(n))
    .sum();
    let events = wa_total + u64::from(v.texts_sent) + u64::from(v.texts_received) + v.calls.len() as u64;
    if events > (end - start + 1) as u64 {
        return Err(ScenarioError::InvalidScenario(format!(
            "{events} events do not fit in {} distinct seconds",
            end - start + 1
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut clock = Clock {
        start,
        end,
        used: BTreeSet::new(),
    };
    let mut ex = Expected::default();
    let mut files: BTreeMap<String, Content> = BTreeMap::new();
    let mut scripts = BTreeMap::new();
    let mut truth = GroundTruth::default();

    // WhatsApp
    let wa_actors = s.whatsapp_actors();
    let mut plan: Vec<(WaKind, bool, u32)> = vec![
        (WaKind::Text, true, w.chats_sent),
        (WaKind::Text, false, w.chats_received),
        (WaKind::Photo, true, w.photos_sent),
        (WaKind::Photo, false, w.photos_received),
        (WaKind::Video, true, w.videos_sent),
        (WaKind::Video, false, w.videos_received),
        (WaKind::Contact, true, w.contacts_sent),
        (WaKind::Contact, false, w.contacts_received),
        (WaKind::Audio, true, w.audio_sent),
        (WaKind::Audio, false, w.audio_received),
    ];
    plan.retain(|p| p.2 > 0);
    let mut wa_rows: Vec<WaRow> = Vec::new();
    for &(kind, outgoing, n) in &plan {
        for _ in 0..n {
            let actor = *wa_actors.choose(&mut rng).expect("validated");
            let millis = clock.second(&mut rng) * 1000 + rng.gen_range(0..1000);
            wa_rows.push(WaRow {
                millis,
                actor,
                outgoing,
                kind,
            });
        }
    }
    wa_rows.sort_by_key(|r| r.millis);

    let mut msg = Script::new();
    msg.ddl("CREATE TABLE android_metadata (locale TEXT)");
    msg.ddl(
        "CREATE TABLE messages (_id INTEGER PRIMARY KEY AUTOINCREMENT, key_remote_jid TEXT NOT NULL, \
         key_from_me INTEGER, key_id TEXT NOT NULL, status INTEGER, needs_push INTEGER, data TEXT, \
         timestamp INTEGER, media_url TEXT, media_mime_type TEXT, media_wa_type TEXT, media_size INTEGER, \
         media_name TEXT, latitude REAL, longitude REAL, thumb_image TEXT, remote_resource TEXT, \
         received_timestamp INTEGER, send_timestamp INTEGER, receipt_server_timestamp INTEGER, \
         receipt_device_timestamp INTEGER, raw_data BLOB, recipient_count INTEGER, media_duration INTEGER, \
         origin INTEGER)",
    );
    msg.ddl(
        "CREATE TABLE chat_list (_id INTEGER PRIMARY KEY AUTOINCREMENT, key_remote_jid TEXT UNIQUE, \
         message_table_id INTEGER, subject TEXT, creation INTEGER)",
    );
    msg.ddl("CREATE INDEX messages_jid_id_index ON messages (key_remote_jid, _id)");
    msg.insert("android_metadata", &["locale"], vec!["en_US".into()]);

    let mut counters: BTreeMap<(&str, String), u32> = BTreeMap::new();
    let mut wa_messages = Vec::new();
    let mut last_in_thread: BTreeMap<usize, i64> = BTreeMap::new();
    for (i, r) in wa_rows.iter().enumerate() {
        let rowid = i as i64 + 1;
        let actor = &s.actors[r.actor];
        let key = jid(&actor.number);
        last_in_thread.insert(r.actor, rowid);
        let (mut text, mut media_name, mut url, mut mime, mut size, mut thumb) =
            (None, None, None, None, None::<i64>, None);
        match r.kind {
            WaKind::Text => text = Some(PHRASES.choose(&mut rng).unwrap().to_string()),
            WaKind::Contact => {
                let shared = s.actors.choose(&mut rng).unwrap();
                text = Some(vcard(&shared.name, &shared.number));
                media_name = Some(shared.name.clone());
            }
            kind => {
                let (prefix, ext, folder, m, magic) = kind.media().unwrap();
                let day = yyyymmdd(r.millis);
                let n = counters.entry((prefix, day.clone())).or_insert(0);
                let name = format!("{prefix}-{day}-WA{n:04}.{ext}");
                *n += 1;
                let dir = if r.outgoing {
                    format!("{MEDIA_DIR}/{folder}/Sent")
                } else {
                    format!("{MEDIA_DIR}/{folder}")
                };
                let len = rng.gen_range(256..2048);
                files.insert(format!("{dir}/{name}"), Content::Bytes(random_bytes(&mut rng, magic, len)));
                size = Some(len as i64);
                url = Some(format!(
                    "https://mms{}.whatsapp.net/d/{}/{}.{ext}",
                    rng.gen_range(800..900),
                    token(&mut rng, 20),
                    token(&mut rng, 43)
                ));
                mime = Some(m.to_string());
                if kind != WaKind::Audio {
                    let tlen = rng.gen_range(600..3000);
                    thumb = Some(random_bytes(&mut rng, b"\xff\xd8\xff\xe0", tlen));
                }
                media_name = Some(name);
            }
        }
        let received = r.millis + if r.outgoing { 0 } else { rng.gen_range(100..5000) };
        msg.insert(
            "messages",
            &[
                "_id", "key_remote_jid", "key_from_me", "key_id", "status", "needs_push", "data",
                "timestamp", "media_url", "media_mime_type", "media_wa_type", "media_size",
                "media_name", "latitude", "longitude", "received_timestamp", "raw_data", "origin",
            ],
            vec![
                rowid.into(),
                key.clone().into(),
                i64::from(r.outgoing).into(),
                hex::encode_upper(rng.gen::<[u8; 16]>()).into(),
                (if r.outgoing { 5 } else { 0 }).into(),
                0.into(),
                text.clone().into(),
                r.millis.into(),
                url.into(),
                mime.into(),
                r.kind.wa_type().to_string().into(),
                size.unwrap_or(0).into(),
                media_name.clone().into(),
                Value::Real(0.0),
                Value::Real(0.0),
                received.into(),
                thumb.map(Value::Blob).unwrap_or(Value::Null),
                0.into(),
            ],
        );
        let direction = if r.outgoing {
            Direction::Outgoing
        } else {
            Direction::Incoming
        };
        truth.whatsapp.push(WaTruth {
            thread_key: key.clone(),
            direction,
            text: text.clone(),
            timestamp_utc: civil_utc(r.millis),
            media_name: media_name.clone(),
        });
        wa_messages.push(ChatMessage {
            store_path: MSGSTORE.into(),
            rowid,
            thread_key: key,
            direction,
            timestamp: stamp(r.millis),
            text,
            media_name,
            raw_cells: Vec::new(),
        });
    }
    let mut wa_threads = Vec::new();
    for (i, &a) in wa_actors.iter().enumerate() {
        let rowid = i as i64 + 1;
        let key = jid(&s.actors[a].number);
        msg.insert(
            "chat_list",
            &["_id", "key_remote_jid", "message_table_id", "creation"],
            vec![
                rowid.into(),
                key.clone().into(),
                last_in_thread.get(&a).copied().into(),
                (start * 1000).into(),
            ],
        );
        wa_threads.push(ChatThread {
            store_path: MSGSTORE.into(),
            rowid,
            thread_key: key,
        });
    }
    scripts.insert(MSGSTORE.to_string(), msg.finish());
    files.insert(MSGSTORE.into(), Content::Sqlite);
    ex.table("whatsapp.chat_list.table", MSGSTORE, "chat_list");
    ex.column("whatsapp.chat_list.thread", MSGSTORE, "chat_list", "key_remote_jid");
    ex.table("whatsapp.messages.table", MSGSTORE, "messages");
    ex.assume("whatsapp.sqlite_sequence", MSGSTORE, "sqlite_sequence present; recorded, not interpreted");
    for (key, col) in [
        ("thread", "key_remote_jid"),
        ("from_me", "key_from_me"),
        ("timestamp", "timestamp"),
        ("text", "data"),
        ("media_name", "media_name"),
        ("media_url", "media_url"),
    ] {
        ex.column(&format!("whatsapp.messages.{key}"), MSGSTORE, "messages", col);
    }
    if !wa_messages.is_empty() {
        ex.assume("timestamp.unit", MSGSTORE, "messages: milliseconds (value >= 10^12)");
    }

    let mut wa = Script::new();
    wa.ddl("CREATE TABLE android_metadata (locale TEXT)");
    wa.ddl(
        "CREATE TABLE wa_contacts (_id INTEGER PRIMARY KEY AUTOINCREMENT, jid TEXT NOT NULL, \
         is_whatsapp_user BOOLEAN NOT NULL, status TEXT, status_timestamp INTEGER, number TEXT, \
         raw_contact_id INTEGER, display_name TEXT, phone_type INTEGER, phone_label TEXT, \
         unseen_msg_count INTEGER, photo_ts INTEGER, thumb_ts INTEGER, photo_id_timestamp INTEGER, \
         given_name TEXT, family_name TEXT, wa_name TEXT, sort_name TEXT, callability TEXT)",
    );
    wa.insert("android_metadata", &["locale"], vec!["en_US".into()]);
    let status = "Hey there! I am using WhatsApp.";
    let mut wa_contacts = Vec::new();
    for (i, &a) in wa_actors.iter().enumerate() {
        let rowid = i as i64 + 1;
        let actor = &s.actors[a];
        let (given, family) = actor.name.split_once(' ').unwrap_or((&actor.name, ""));
        wa.insert(
            "wa_contacts",
            &[
                "_id", "jid", "is_whatsapp_user", "status", "status_timestamp", "number",
                "raw_contact_id", "display_name", "phone_type", "unseen_msg_count", "given_name",
                "family_name", "sort_name",
            ],
            vec![
                rowid.into(),
                jid(&actor.number).into(),
                1.into(),
                status.into(),
                (start * 1000).into(),
                actor.number.clone().into(),
                (a as i64 + 1).into(),
                actor.name.clone().into(),
                2.into(),
                0.into(),
                given.into(),
                family.into(),
                actor.name.to_lowercase().into(),
            ],
        );
        wa_contacts.push(Contact {
            store_path: WA_DB.into(),
            rowid,
            identifier: jid(&actor.number),
            display_name: Some(actor.name.clone()),
            status: Some(status.into()),
        });
        let len = rng.gen_range(400..1600);
        files.insert(
            format!("{AVATAR_DIR}/{}.j", jid(&actor.number)),
            Content::Bytes(random_bytes(&mut rng, b"\xff\xd8\xff\xe0", len)),
        );
    }
    scripts.insert(WA_DB.to_string(), wa.finish());
    files.insert(WA_DB.into(), Content::Sqlite);
    ex.table("whatsapp.contacts.table", WA_DB, "wa_contacts");
    ex.column("whatsapp.contacts.identifier", WA_DB, "wa_contacts", "jid");
    ex.column("whatsapp.contacts.name", WA_DB, "wa_contacts", "display_name");
    ex.column("whatsapp.contacts.status", WA_DB, "wa_contacts", "status");

    // WhatsApp keeps the folder even when it holds nothing yet
    files.insert(format!("{MEDIA_DIR}/WhatsApp Images/Sent/.nomedia"), Content::Bytes(Vec::new()));

    let backup_name = format!("msgstore-{}.1.db.crypt", civil_utc(end * 1000).get(..10).unwrap());
    let backup_path = format!("{BACKUP_DIR}/{backup_name}");
    let backup_len = rng.gen_range(4096..12288);
    let backup = random_bytes(&mut rng, &[], backup_len);
    let encrypted_backups = vec![EncryptedBackupRef {
        path: backup_path.clone(),
        size_bytes: backup.len() as u64,
        sha256_hex: hex::encode(Sha256::digest(&backup)),
        classification: "encrypted-chat-backup".into(),
        note: None,
    }];
    files.insert(backup_path.clone(), Content::Bytes(backup));

    // Viber calls
    let mut calls: Vec<CallTruth> = v
        .calls
        .iter()
        .map(|c| CallTruth {
            number: s.actors[c.actor].number.clone(),
            direction: c.direction,
            duration_seconds: c.duration_seconds,
            start_epoch_seconds: clock.second(&mut rng),
            in_data_db: c.also_in_data_db,
        })
        .collect();
    calls.sort_by_key(|c| c.start_epoch_seconds);
    let code = |k: CallKind| match k {
        CallKind::Incoming => 1i64,
        CallKind::Outgoing => 2,
        CallKind::Missed => 3,
    };
    let call_dir = |k: CallKind| match k {
        CallKind::Incoming => CallDirection::Incoming,
        CallKind::Outgoing => CallDirection::Outgoing,
        CallKind::Missed => CallDirection::Missed,
    };

    let mut log = Script::new();
    log.ddl("CREATE TABLE android_metadata (locale TEXT)");
    log.ddl(
        "CREATE TABLE viber_call_log (_id INTEGER PRIMARY KEY AUTOINCREMENT, number TEXT, date INTEGER, \
         duration INTEGER, type INTEGER, viber_call_type INTEGER DEFAULT 1)",
    );
    log.insert("android_metadata", &["locale"], vec!["en_US".into()]);
    let mut viber_calls = Vec::new();
    let mut data_rowid = 0i64;
    for (i, c) in calls.iter().enumerate() {
        let rowid = i as i64 + 1;
        let ms = c.start_epoch_seconds * 1000;
        log.insert(
            "viber_call_log",
            &["_id", "number", "date", "duration", "type", "viber_call_type"],
            vec![
                rowid.into(),
                c.number.clone().into(),
                ms.into(),
                i64::from(c.duration_seconds).into(),
                code(c.direction).into(),
                1.into(),
            ],
        );
        let mut also = Vec::new();
        if c.in_data_db {
            data_rowid += 1;
            also.push(Provenance {
                store_path: VIBER_DATA.into(),
                rowid: data_rowid,
            });
        }
        viber_calls.push(CallRecord {
            store_path: CALL_LOG.into(),
            rowid,
            remote_number: c.number.clone(),
            direction: call_dir(c.direction),
            direction_code: Some(code(c.direction)),
            start_time: stamp(ms),
            duration_seconds: u64::from(c.duration_seconds),
            also_recorded_in: also,
            raw_cells: Vec::new(),
        });
    }
    scripts.insert(CALL_LOG.to_string(), log.finish());
    files.insert(CALL_LOG.into(), Content::Sqlite);
    ex.table("viber.call_log.table", CALL_LOG, "viber_call_log");
    let call_columns = |ex: &mut Expected, store: &str, table: &str| {
        for (key, col) in [("number", "number"), ("date", "date"), ("duration", "duration"), ("type", "type")] {
            ex.column(&format!("viber.call.{key}"), store, table, col);
        }
    };
    call_columns(&mut ex, CALL_LOG, "viber_call_log");
    if !calls.is_empty() {
        ex.assume("timestamp.unit", CALL_LOG, "viber_call_log: milliseconds (value >= 10^12)");
        ex.assume("viber.call.duration_unit", CALL_LOG, "viber_call_log: seconds");
    }

    // viber_data
    let viber_actors = s.viber_actors();
    let mut data = Script::new();
    data.ddl("CREATE TABLE android_metadata (locale TEXT)");
    data.ddl(
        "CREATE TABLE phonebook_contact (_id INTEGER PRIMARY KEY, native_id INTEGER, display_name TEXT, \
         phonetic_name TEXT, starred BOOLEAN, viber BOOLEAN, contact_lookup_key TEXT, version INTEGER)",
    );
    data.ddl(
        "CREATE TABLE phonebook_raw_contact (_id INTEGER PRIMARY KEY, contact_id INTEGER, version INTEGER, \
         starred BOOLEAN, viber BOOLEAN)",
    );
    data.ddl(
        "CREATE TABLE phonebook_data (_id INTEGER PRIMARY KEY, raw_id INTEGER, data1 TEXT, data2 TEXT, \
         data3 TEXT, mime_type INTEGER)",
    );
    data.ddl(
        "CREATE TABLE viber_numbers (_id INTEGER PRIMARY KEY, number TEXT, canonized_number TEXT, \
         photo TEXT, actual_photo TEXT)",
    );
    data.ddl(
        "CREATE TABLE calls (_id INTEGER PRIMARY KEY, number TEXT, date INTEGER, duration INTEGER, \
         type INTEGER, token INTEGER, viber_call BOOLEAN)",
    );
    data.insert("android_metadata", &["locale"], vec!["en_US".into()]);
    let mut viber_contacts = Vec::new();
    for (i, a) in s.actors.iter().enumerate() {
        let id = i as i64 + 1;
        data.insert(
            "phonebook_contact",
            &["_id", "native_id", "display_name", "starred", "viber", "version"],
            vec![
                id.into(),
                (100 + id).into(),
                a.name.clone().into(),
                0.into(),
                i64::from(a.viber).into(),
                1.into(),
            ],
        );
        data.insert(
            "phonebook_raw_contact",
            &["_id", "contact_id", "version", "starred", "viber"],
            vec![id.into(), id.into(), 1.into(), 0.into(), i64::from(a.viber).into()],
        );
        data.insert(
            "phonebook_data",
            &["_id", "raw_id", "data1", "data2", "mime_type"],
            vec![id.into(), id.into(), a.number.clone().into(), "2".into(), 0.into()],
        );
        viber_contacts.push(Contact {
            store_path: VIBER_DATA.into(),
            rowid: id,
            identifier: a.number.clone(),
            display_name: Some(a.name.clone()),
            status: None,
        });
    }
    let mut viber_numbers = Vec::new();
    for (i, &a) in viber_actors.iter().enumerate() {
        let n = &s.actors[a].number;
        data.insert(
            "viber_numbers",
            &["_id", "number", "canonized_number"],
            vec![(i as i64 + 1).into(), n.clone().into(), n.trim_start_matches('+').into()],
        );
        viber_numbers.push(n.clone());
    }
    let mut data_calls = 0;
    for c in calls.iter().filter(|c| c.in_data_db) {
        data_calls += 1;
        data.insert(
            "calls",
            &["_id", "number", "date", "duration", "type", "token", "viber_call"],
            vec![
                (data_calls as i64).into(),
                c.number.clone().into(),
                c.start_epoch_seconds.into(),
                i64::from(c.duration_seconds).into(),
                code(c.direction).into(),
                rng.gen_range(1i64..i64::MAX).into(),
                1.into(),
            ],
        );
    }
    scripts.insert(VIBER_DATA.to_string(), data.finish());
    files.insert(VIBER_DATA.into(), Content::Sqlite);
    for (key, table) in [
        ("viber.phonebook.contact_table", "phonebook_contact"),
        ("viber.phonebook.raw_table", "phonebook_raw_contact"),
        ("viber.phonebook.data_table", "phonebook_data"),
        ("viber.data.numbers_table", "viber_numbers"),
        ("viber.data.calls_table", "calls"),
    ] {
        ex.table(key, VIBER_DATA, table);
    }
    ex.column("viber.phonebook.data.raw_id", VIBER_DATA, "phonebook_data", "raw_id");
    ex.column("viber.phonebook.data.number", VIBER_DATA, "phonebook_data", "data1");
    ex.column("viber.phonebook.raw.id", VIBER_DATA, "phonebook_raw_contact", "_id");
    ex.column("viber.phonebook.raw.contact_id", VIBER_DATA, "phonebook_raw_contact", "contact_id");
    ex.column("viber.phonebook.contact.id", VIBER_DATA, "phonebook_contact", "_id");
    ex.column("viber.phonebook.contact.name", VIBER_DATA, "phonebook_contact", "display_name");
    ex.column("viber.data.numbers.number", VIBER_DATA, "viber_numbers", "number");
    call_columns(&mut ex, VIBER_DATA, "calls");
    if data_calls > 0 {
        ex.assume("timestamp.unit", VIBER_DATA, "calls: seconds (value < 10^12)");
        ex.assume("viber.call.duration_unit", VIBER_DATA, "calls: seconds");
    }

    // viber_messages
    let mut texts: Vec<(usize, bool, i64)> = Vec::new();
    for (outgoing, n) in [(true, v.texts_sent), (false, v.texts_received)] {
        for _ in 0..n {
            let actor = *viber_actors.choose(&mut rng).expect("validated");
            let millis = clock.second(&mut rng) * 1000 + rng.gen_range(0..1000);
            texts.push((actor, outgoing, millis));
        }
    }
    texts.sort_by_key(|t| t.2);
    let thread_of = |actor: usize| viber_actors.iter().position(|&a| a == actor).unwrap() as i64 + 1;

    let mut vm = Script::new();
    vm.ddl("CREATE TABLE android_metadata (locale TEXT)");
    vm.ddl("CREATE TABLE threads (_id INTEGER PRIMARY KEY, date LONG, recipient_number TEXT, read INTEGER)");
    vm.ddl(
        "CREATE TABLE participants (_id INTEGER PRIMARY KEY, thread_id INTEGER, number TEXT, \
         display_name TEXT, contact_id INTEGER)",
    );
    vm.ddl(
        "CREATE TABLE messages (_id INTEGER PRIMARY KEY AUTOINCREMENT, thread_id INTEGER, address TEXT, \
         body TEXT, date LONG, send_type INTEGER, opened INTEGER, status INTEGER, type INTEGER, \
         unread INTEGER, msg_token INTEGER)",
    );
    vm.insert("android_metadata", &["locale"], vec!["en_US".into()]);
    for (i, &a) in viber_actors.iter().enumerate() {
        let actor = &s.actors[a];
        let last = texts.iter().filter(|t| t.0 == a).map(|t| t.2).max().unwrap_or(start * 1000);
        let id = i as i64 + 1;
        vm.insert(
            "threads",
            &["_id", "date", "recipient_number", "read"],
            vec![id.into(), last.into(), actor.number.clone().into(), 1.into()],
        );
        vm.insert(
            "participants",
            &["_id", "thread_id", "number", "display_name", "contact_id"],
            vec![
                id.into(),
                id.into(),
                actor.number.clone().into(),
                actor.name.clone().into(),
                (a as i64 + 1).into(),
            ],
        );
    }
    let mut viber_messages = Vec::new();
    for (i, &(a, outgoing, millis)) in texts.iter().enumerate() {
        let rowid = i as i64 + 1;
        let number = s.actors[a].number.clone();
        let body = PHRASES.choose(&mut rng).unwrap().to_string();
        vm.insert(
            "messages",
            &["_id", "thread_id", "address", "body", "date", "send_type", "opened", "status", "type", "unread", "msg_token"],
            vec![
                rowid.into(),
                thread_of(a).into(),
                number.clone().into(),
                body.clone().into(),
                millis.into(),
                i64::from(outgoing).into(),
                1.into(),
                (if outgoing { 2 } else { 0 }).into(),
                0.into(),
                0.into(),
                rng.gen_range(1i64..i64::MAX).into(),
            ],
        );
        truth.texts.push(TextTruth {
            number: number.clone(),
            outgoing,
            epoch_millis: millis,
            body: body.clone(),
        });
        viber_messages.push(ViberMessage {
            store_path: VIBER_MESSAGES.into(),
            rowid,
            thread_id: thread_of(a),
            remote_number: Some(number),
            direction: if outgoing {
                Direction::Outgoing
            } else {
                Direction::Incoming
            },
            timestamp: stamp(millis),
            text: Some(body),
            raw_cells: Vec::new(),
        });
    }
    scripts.insert(VIBER_MESSAGES.to_string(), vm.finish());
    files.insert(VIBER_MESSAGES.into(), Content::Sqlite);
    ex.table("viber.messages.table", VIBER_MESSAGES, "messages");
    ex.table("viber.threads.table", VIBER_MESSAGES, "threads");
    ex.column("viber.threads.id", VIBER_MESSAGES, "threads", "_id");
    ex.table("viber.participants.table", VIBER_MESSAGES, "participants");
    ex.column("viber.participants.thread", VIBER_MESSAGES, "participants", "thread_id");
    ex.column("viber.participants.number", VIBER_MESSAGES, "participants", "number");
    for (key, col) in [("thread", "thread_id"), ("date", "date"), ("direction", "send_type"), ("text", "body")] {
        ex.column(&format!("viber.messages.{key}"), VIBER_MESSAGES, "messages", col);
    }
    if !texts.is_empty() {
        ex.assume("timestamp.unit", VIBER_MESSAGES, "messages: milliseconds (value >= 10^12)");
    }
    truth.calls = calls;

    add_decoys(s, &mut rng, &mut files, &wa_messages);

    // media references by exact file name under the media folders
    let mut by_name: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for path in files.keys() {
        let lower = path.to_lowercase();
        if lower.starts_with(&format!("{}/", MEDIA_DIR.to_lowercase()))
            || lower.starts_with(&format!("{}/", AVATAR_DIR.to_lowercase()))
        {
            by_name.entry(path.rsplit('/').next().unwrap()).or_default().push(path.clone());
        }
    }
    let media_refs = wa_messages
        .iter()
        .filter_map(|m| {
            let name = m.media_name.clone()?;
            let paths = by_name.get(name.as_str()).cloned().unwrap_or_default();
            Some(MediaRef {
                message: Provenance {
                    store_path: m.store_path.clone(),
                    rowid: m.rowid,
                },
                status: if paths.is_empty() {
                    RefStatus::Unresolved
                } else {
                    RefStatus::Resolved
                },
                media_name: name,
                resolved_paths: paths,
            })
        })
        .collect();

    let mut stores = vec![
        db_store(App::WhatsApp, StoreKind::MessageDb, MSGSTORE),
        db_store(App::WhatsApp, StoreKind::ContactDb, WA_DB),
        db_store(App::Viber, StoreKind::CallLogDb, CALL_LOG),
        db_store(App::Viber, StoreKind::ViberDataDb, VIBER_DATA),
        db_store(App::Viber, StoreKind::ViberMessagesDb, VIBER_MESSAGES),
        plain_store(StoreKind::EncryptedBackup, &backup_path),
        plain_store(StoreKind::MediaDir, MEDIA_DIR),
    ];
    if files.keys().any(|p| p.starts_with(&format!("{AVATAR_DIR}/"))) {
        stores.push(plain_store(StoreKind::AvatarDir, AVATAR_DIR));
    }
    stores.sort_by(|a, b| (a.app, a.kind, &a.path).cmp(&(b.app, b.kind, &b.path)));

    let summaries = summaries(&truth);
    let timeline = timeline(&wa_messages, &viber_calls, &viber_messages);

    let expected = CaseReport {
        report_format: REPORT_FORMAT,
        case_id: s.case_id.clone().unwrap_or_else(|| DEFAULT_CASE_ID.to_string()),
        manifest_digest: String::new(),
        stores,
        sidecars: Vec::new(),
        whatsapp: WhatsAppSection {
            messages: wa_messages,
            threads: wa_threads,
            contacts: wa_contacts,
            media_refs,
            encrypted_backups,
        },
        viber: ViberSection {
            calls: viber_calls,
            messages: viber_messages,
            contacts: viber_contacts,
            viber_numbers,
            summaries,
        },
        timeline,
        warnings: Vec::new(),
        assumptions: ex.assumptions.into_iter().collect(),
        damage: Vec::new(),
    };
    let layout = files
        .into_iter()
        .map(|(path, content)| LayoutEntry { path, content })
        .collect();
    Ok(Generated {
        scripts,
        layout,
        expected,
        truth,
    })
}

fn db_store(app: App, kind: StoreKind, path: &str) -> ArtifactStore {
    ArtifactStore {
        app,
        kind,
        path: path.into(),
        confidence: Confidence::PathAndMagic,
        suspicious: false,
    }
}

fn plain_store(kind: StoreKind, path: &str) -> ArtifactStore {
    ArtifactStore {
        app: App::WhatsApp,
        kind,
        path: path.into(),
        confidence: Confidence::PathOnly,
        suspicious: false,
    }
}

/// Per-number arithmetic straight from the enacted activity.
pub fn summaries(truth: &GroundTruth) -> Vec<PerContactSummary> {
    let mut by: BTreeMap<&str, PerContactSummary> = BTreeMap::new();
    fn entry<'m, 'a>(by: &'m mut BTreeMap<&'a str, PerContactSummary>, n: &'a str) -> &'m mut PerContactSummary {
        by.entry(n).or_insert_with(|| PerContactSummary {
            remote_number: n.to_string(),
            ..Default::default()
        })
    }
    for c in &truth.calls {
        let e = entry(&mut by, &c.number);
        e.total_calls += 1;
        e.total_call_seconds += u64::from(c.duration_seconds);
    }
    for t in &truth.texts {
        let e = entry(&mut by, &t.number);
        if t.outgoing {
            e.messages_sent += 1;
        } else {
            e.messages_received += 1;
        }
    }
    by.into_values().collect()
}

fn timeline(wa: &[ChatMessage], calls: &[CallRecord], texts: &[ViberMessage]) -> Vec<TimelineEvent> {
    let ev = |ts: &Timestamp, app, kind, store: &str, rowid, dir: &str, cp: Option<String>| {
        let millis = match ts.unit {
            EpochUnit::Milliseconds => ts.raw,
            EpochUnit::Seconds => ts.raw * 1000,
        };
        TimelineEvent {
            timestamp_utc: ts.utc.clone(),
            epoch_millis: millis,
            app,
            kind,
            store_path: store.into(),
            rowid,
            direction: dir.into(),
            counterpart: cp,
        }
    };
    let mut out: Vec<TimelineEvent> = Vec::new();
    for m in wa {
        out.push(ev(&m.timestamp, App::WhatsApp, EventKind::Message, &m.store_path, m.rowid, m.direction.as_str(), Some(m.thread_key.clone())));
    }
    for c in calls {
        out.push(ev(&c.start_time, App::Viber, EventKind::Call, &c.store_path, c.rowid, c.direction.as_str(), Some(c.remote_number.clone())));
    }
    for m in texts {
        out.push(ev(&m.timestamp, App::Viber, EventKind::Message, &m.store_path, m.rowid, m.direction.as_str(), m.remote_number.clone()));
    }
    out.sort_by(|a, b| {
        (a.epoch_millis, a.app, &a.store_path, a.rowid, a.kind).cmp(&(b.epoch_millis, b.app, &b.store_path, b.rowid, b.kind))
    });
    out
}

/// Paths that resemble evidence locations but must not be reported.
const NEAR_MISSES: &[&str] = &[
    "data/data/com.whatsapp.extra/databases/msgstore.db",
    "data/data/com.example.chatbackup/databases/wa.db",
    "data/data/com.whatsapp/databases/msgstore.db.bak",
    "mnt/sdcard/Download/msgstore-2013-01-10.1.db.crypt",
    "mnt/sdcard/WhatsApp/Databases/wa.db.crypt",
    "data/data/com.viber.voip/files/viber_data",
    "data/data/com.viber.voip/databases-old/viber_messages",
    "data/data/com.viber.voip/shared_prefs/viber_call_log.db.xml",
    "mnt/sdcard/WhatsApp Media/x.jpg",
    "data/data/com.whatsapp/files/avatars.bak/x.j",
];

const DECOY_DIRS: &[&str] = &[
    "mnt/sdcard/DCIM/Camera",
    "mnt/sdcard/Download",
    "mnt/sdcard/Music",
    "mnt/sdcard/Documents",
    "mnt/sdcard/Android/data/com.android.chrome/cache",
    "data/data/com.android.providers.contacts/databases",
    "data/data/com.google.android.gm/cache",
    "data/data/com.facebook.katana/files",
    "data/data/com.android.browser/app_cache",
    "system/app",
];

const DECOY_EXTS: &[&str] = &["jpg", "txt", "dat", "db", "log", "mp3", "xml", "bin"];

fn add_decoys(
    s: &Scenario,
    rng: &mut ChaCha8Rng,
    files: &mut BTreeMap<String, Content>,
    wa_messages: &[ChatMessage],
) {
    let mut paths: Vec<String> = NEAR_MISSES.iter().map(|p| p.to_string()).collect();
    // same name as a real attachment, outside any WhatsApp media folder
    if let Some(name) = wa_messages
        .iter()
        .filter_map(|m| m.media_name.as_deref())
        .find(|n| n.starts_with("IMG-"))
    {
        paths.push(format!("mnt/sdcard/Pictures/Media/{name}"));
    }
    let mut i = 0;
    while paths.len() < s.decoys as usize {
        let dir = DECOY_DIRS.choose(rng).unwrap();
        let ext = DECOY_EXTS.choose(rng).unwrap();
        paths.push(format!("{dir}/file_{i:05}.{ext}"));
        i += 1;
    }
    for p in paths {
        let sqlite_like = p.ends_with(".db") || p.ends_with("viber_data") || p.ends_with("viber_messages");
        let prefix: &[u8] = if sqlite_like { b"SQLite format 3\0" } else { b"" };
        let len = rng.gen_range(16..600);
        files.insert(p, Content::Bytes(random_bytes(rng, prefix, len)));
    }
}
