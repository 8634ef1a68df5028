//! The case report: every parsed artifact plus a merged timeline.

mod emit;

use serde::{Deserialize, Serialize};

pub use emit::{emit_report, Emitted, Format, ReportError};

use crate::locator::{App, ArtifactStore};
use crate::media::{EncryptedBackupRef, MediaRef};
use crate::model::Contact;
use crate::notes::{Assumption, StoreDamage, Warning};
use crate::viber::{CallRecord, PerContactSummary, ViberMessage};
use crate::whatsapp::{ChatMessage, ChatThread};

/// Bumped whenever the JSON layout changes incompatibly.
pub const REPORT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WhatsAppSection {
    pub messages: Vec<ChatMessage>,
    pub threads: Vec<ChatThread>,
    pub contacts: Vec<Contact>,
    pub media_refs: Vec<MediaRef>,
    pub encrypted_backups: Vec<EncryptedBackupRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViberSection {
    pub calls: Vec<CallRecord>,
    pub messages: Vec<ViberMessage>,
    pub contacts: Vec<Contact>,
    pub viber_numbers: Vec<String>,
    pub summaries: Vec<PerContactSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Message,
    Call,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Message => "message",
            EventKind::Call => "call",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub timestamp_utc: String,
    pub epoch_millis: i64,
    pub app: App,
    pub kind: EventKind,
    pub store_path: String,
    pub rowid: i64,
    /// incoming, outgoing, missed or unknown.
    pub direction: String,
    /// Thread key (WhatsApp) or phone number (Viber), when known.
    pub counterpart: Option<String>,
}

impl TimelineEvent {
    fn sort_key(&self) -> (i64, App, &str, i64, EventKind) {
        (self.epoch_millis, self.app, &self.store_path, self.rowid, self.kind)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub report_format: u32,
    pub case_id: String,
    /// Tree digest of the evidence manifest built before parsing.
    pub manifest_digest: String,
    pub stores: Vec<ArtifactStore>,
    /// Journal and WAL files found beside database stores; not merged.
    pub sidecars: Vec<String>,
    pub whatsapp: WhatsAppSection,
    pub viber: ViberSection,
    pub timeline: Vec<TimelineEvent>,
    pub warnings: Vec<Warning>,
    pub assumptions: Vec<Assumption>,
    pub damage: Vec<StoreDamage>,
}

/// One event per message and call, ordered by time, then app, store and rowid.
pub fn build_timeline(
    whatsapp: &[ChatMessage],
    viber_calls: &[CallRecord],
    viber_messages: &[ViberMessage],
) -> Vec<TimelineEvent> {
    let mut events: Vec<TimelineEvent> = Vec::new();
    events.extend(whatsapp.iter().map(|m| TimelineEvent {
        timestamp_utc: m.timestamp.utc.clone(),
        epoch_millis: m.timestamp.epoch_millis(),
        app: App::WhatsApp,
        kind: EventKind::Message,
        store_path: m.store_path.clone(),
        rowid: m.rowid,
        direction: m.direction.as_str().to_string(),
        counterpart: Some(m.thread_key.clone()),
    }));
    events.extend(viber_calls.iter().map(|c| TimelineEvent {
        timestamp_utc: c.start_time.utc.clone(),
        epoch_millis: c.start_time.epoch_millis(),
        app: App::Viber,
        kind: EventKind::Call,
        store_path: c.store_path.clone(),
        rowid: c.rowid,
        direction: c.direction.as_str().to_string(),
        counterpart: Some(c.remote_number.clone()),
    }));
    events.extend(viber_messages.iter().map(|m| TimelineEvent {
        timestamp_utc: m.timestamp.utc.clone(),
        epoch_millis: m.timestamp.epoch_millis(),
        app: App::Viber,
        kind: EventKind::Message,
        store_path: m.store_path.clone(),
        rowid: m.rowid,
        direction: m.direction.as_str().to_string(),
        counterpart: m.remote_number.clone(),
    }));
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Direction;
    use crate::timestamp::normalize_timestamp;
    use crate::viber::CallDirection;

    fn wa(rowid: i64, raw: i64) -> ChatMessage {
        ChatMessage {
            store_path: "w".into(),
            rowid,
            thread_key: "t".into(),
            direction: Direction::Outgoing,
            timestamp: normalize_timestamp(raw),
            text: None,
            media_name: None,
            raw_cells: Vec::new(),
        }
    }

    fn call(rowid: i64, raw: i64) -> CallRecord {
        CallRecord {
            store_path: "v".into(),
            rowid,
            remote_number: "+15550001111".into(),
            direction: CallDirection::Incoming,
            direction_code: Some(1),
            start_time: normalize_timestamp(raw),
            duration_seconds: 1,
            also_recorded_in: Vec::new(),
            raw_cells: Vec::new(),
        }
    }

    #[test]
    fn ordered_by_time() {
        let t = build_timeline(&[wa(1, 1_357_041_600_000)], &[call(1, 1_357_041_660)], &[]);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].app, App::WhatsApp);
        assert_eq!(t[1].timestamp_utc, "2013-01-01T12:01:00Z");
        assert!(build_timeline(&[], &[], &[]).is_empty());
    }

    #[test]
    fn ties_break_on_app_then_rowid() {
        let t = build_timeline(
            &[wa(9, 1_357_041_600_000), wa(2, 1_357_041_600_000)],
            &[call(1, 1_357_041_600)],
            &[],
        );
        let order: Vec<_> = t.iter().map(|e| (e.app, e.rowid)).collect();
        assert_eq!(order, [(App::WhatsApp, 2), (App::WhatsApp, 9), (App::Viber, 1)]);
    }

    #[test]
    fn sub_second_times_sort_numerically() {
        // "12:00:00.500Z" sorts before "12:00:00Z" as text; time order must win
        let t = build_timeline(&[wa(1, 1_357_041_600_500), wa(2, 1_357_041_600_000)], &[], &[]);
        assert_eq!(t[0].rowid, 2);
    }
}
