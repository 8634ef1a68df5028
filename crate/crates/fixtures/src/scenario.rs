//! Scenario files: which activities a synthetic device saw.
//!
//! ```toml
//! seed = 2013
//! start_utc = "2013-01-01T09:00:00Z"
//! end_utc = "2013-01-14T18:00:00Z"
//! decoys = 1000
//!
//! [[actors]]
//! name = "Alex Example"
//! number = "+12025550101"
//! whatsapp = true
//! viber = true
//!
//! [whatsapp]
//! chats_sent = 4
//! photos_received = 1
//!
//! [viber]
//! texts_sent = 2
//! texts_received = 1
//!
//! [[viber.calls]]
//! actor = 0
//! direction = "outgoing"
//! duration_seconds = 60
//! also_in_data_db = true
//! ```
//!
//! Phone numbers must sit in the fictional 555-0100..555-0199 block
//! (`+1NXX5550100` to `+1NXX5550199`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("cannot read scenario {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub name: String,
    pub number: String,
    #[serde(default)]
    pub whatsapp: bool,
    #[serde(default)]
    pub viber: bool,
}

/// Counts per WhatsApp activity class.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhatsAppActivities {
    pub chats_sent: u32,
    pub chats_received: u32,
    pub photos_sent: u32,
    pub photos_received: u32,
    pub videos_sent: u32,
    pub videos_received: u32,
    pub contacts_sent: u32,
    pub contacts_received: u32,
    pub audio_sent: u32,
    pub audio_received: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallKind {
    Incoming,
    Outgoing,
    Missed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViberCall {
    /// Index into `actors`.
    pub actor: usize,
    pub direction: CallKind,
    pub duration_seconds: u32,
    /// Also written to the `calls` table of viber_data.
    #[serde(default)]
    pub also_in_data_db: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViberActivities {
    pub texts_sent: u32,
    pub texts_received: u32,
    pub calls: Vec<ViberCall>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub start_utc: String,
    pub end_utc: String,
    /// Case identifier the expected report carries.
    #[serde(default)]
    pub case_id: Option<String>,
    #[serde(default)]
    pub decoys: u32,
    pub actors: Vec<Actor>,
    #[serde(default)]
    pub whatsapp: WhatsAppActivities,
    #[serde(default)]
    pub viber: ViberActivities,
}

/// `+1` and three digits, then `5550100` to `5550199`.
pub fn is_fictional_number(n: &str) -> bool {
    let Some(rest) = n.strip_prefix("+1") else {
        return false;
    };
    rest.len() == 10
        && rest.bytes().all(|b| b.is_ascii_digit())
        && &rest[3..8] == "55501"
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| ScenarioError::InvalidScenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Start and end as epoch seconds.
    pub fn range(&self) -> Result<(i64, i64), ScenarioError> {
        let parse = |s: &str| {
            chrono::DateTime::parse_from_rfc3339(s)
                .map(|d| d.timestamp())
                .map_err(|e| ScenarioError::InvalidScenario(format!("bad time {s:?}: {e}")))
        };
        Ok((parse(&self.start_utc)?, parse(&self.end_utc)?))
    }

    pub fn whatsapp_actors(&self) -> Vec<usize> {
        (0..self.actors.len()).filter(|&i| self.actors[i].whatsapp).collect()
    }

    pub fn viber_actors(&self) -> Vec<usize> {
        (0..self.actors.len()).filter(|&i| self.actors[i].viber).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidScenario(m));
        let (start, end) = self.range()?;
        // fixture timestamps are chosen to land on the millisecond branch
        if start < 1_000_000_000 {
            return bad("start_utc must be after 2001-09-09".into());
        }
        if end <= start {
            return bad("end_utc must be after start_utc".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.actors {
            if !is_fictional_number(&a.number) {
                return bad(format!("{} is outside the fictional 555-01xx block", a.number));
            }
            if !seen.insert(&a.number) {
                return bad(format!("number {} used twice", a.number));
            }
            if a.name.trim().is_empty() {
                return bad("actor without a name".into());
            }
        }
        let w = &self.whatsapp;
        let wa_total = w.chats_sent
            + w.chats_received
            + w.photos_sent
            + w.photos_received
            + w.videos_sent
            + w.videos_received
            + w.contacts_sent
            + w.contacts_received
            + w.audio_sent
            + w.audio_received;
        if wa_total > 0 && self.whatsapp_actors().is_empty() {
            return bad("WhatsApp activity needs at least one WhatsApp actor".into());
        }
        let v = &self.viber;
        if (v.texts_sent + v.texts_received > 0 || !v.calls.is_empty()) && self.viber_actors().is_empty() {
            return bad("Viber activity needs at least one Viber actor".into());
        }
        for (i, c) in v.calls.iter().enumerate() {
            match self.actors.get(c.actor) {
                Some(a) if a.viber => {}
                Some(_) => return bad(format!("call {i}: actor {} does not use Viber", c.actor)),
                None => return bad(format!("call {i}: no actor {}", c.actor)),
            }
            if c.direction == CallKind::Missed && c.duration_seconds != 0 {
                return bad(format!("call {i}: a missed call lasts 0 seconds"));
            }
        }
        Ok(())
    }
}
