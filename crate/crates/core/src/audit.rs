//! Records which evidence files were touched and how.
//!
//! The pipeline reports every magic sniff, database open and hash through an
//! [`AccessObserver`], which lets tests prove that, for example, encrypted
//! backups are never handed to the SQLite reader.

use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Access {
    /// First bytes read to check the SQLite magic.
    Sniff,
    /// Whole file loaded and opened with the SQLite reader.
    OpenDatabase,
    /// Streamed through SHA-256.
    Hash,
    /// Leading bytes read for a content note (never parsed).
    Peek,
}

pub trait AccessObserver: Sync {
    fn record(&self, access: Access, path: &str);
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoAudit;

impl AccessObserver for NoAudit {
    fn record(&self, _: Access, _: &str) {}
}

/// Keeps every access in arrival order.
#[derive(Debug, Default)]
pub struct AccessLog {
    events: Mutex<Vec<(Access, String)>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> Vec<(Access, String)> {
        self.events.lock().unwrap().clone()
    }

    pub fn paths_with(&self, access: Access) -> Vec<String> {
        self.events
            .lock()
            .unwrap()
            .iter()
            .filter(|(a, _)| *a == access)
            .map(|(_, p)| p.clone())
            .collect()
    }
}

impl AccessObserver for AccessLog {
    fn record(&self, access: Access, path: &str) {
        self.events.lock().unwrap().push((access, path.to_string()));
    }
}
