//! Epoch integers from app databases to UTC ISO-8601 text.

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

const MILLIS_THRESHOLD: i64 = 1_000_000_000_000;
const SECONDS_THRESHOLD: i64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpochUnit {
    Milliseconds,
    Seconds,
}

impl EpochUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            EpochUnit::Milliseconds => "milliseconds",
            EpochUnit::Seconds => "seconds",
        }
    }
}

/// A normalized timestamp that remembers the raw value and the unit chosen for it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp {
    pub utc: String,
    pub raw: i64,
    pub unit: EpochUnit,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub implausible: bool,
}

impl Timestamp {
    /// Milliseconds since the Unix epoch.
    pub fn epoch_millis(&self) -> i64 {
        match self.unit {
            EpochUnit::Milliseconds => self.raw,
            EpochUnit::Seconds => self.raw.saturating_mul(1000),
        }
    }
}

/// Interpret `raw` by magnitude: at least 10^12 is milliseconds, otherwise
/// seconds. Values under 10^9 (before September 2001) are kept but marked
/// implausible.
pub fn normalize_timestamp(raw: i64) -> Timestamp {
    let (unit, implausible) = if raw >= MILLIS_THRESHOLD {
        (EpochUnit::Milliseconds, false)
    } else {
        (EpochUnit::Seconds, raw < SECONDS_THRESHOLD)
    };
    let mut ts = Timestamp {
        utc: String::new(),
        raw,
        unit,
        implausible,
    };
    ts.utc = format_epoch_millis(ts.epoch_millis());
    ts
}

/// `YYYY-MM-DDTHH:MM:SSZ`, with `.mmm` only when the milliseconds are non-zero.
pub fn format_epoch_millis(ms: i64) -> String {
    match DateTime::<Utc>::from_timestamp_millis(ms) {
        Some(dt) if ms.rem_euclid(1000) == 0 => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Millis, true),
        None => format!("out-of-range:{ms}"),
    }
}

/// Inverse of [`format_epoch_millis`].
pub fn parse_utc_millis(text: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(text)
        .ok()
        .map(|dt| dt.with_timezone(&Utc).timestamp_millis())
}
