//! Finds WhatsApp and Viber evidence inside an extraction.
//!
//! Classification is by path suffix (case-insensitive, separator-insensitive)
//! and, for database files, confirmed by sniffing the SQLite magic. A path hit
//! whose content is not SQLite is still reported, flagged suspicious.

use serde::{Deserialize, Serialize};

use crate::audit::{Access, AccessObserver};
use crate::ingest::{normalize_path, ExtractionTree, FileEntry, IngestError};
use crate::sqlite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum App {
    #[serde(rename = "whatsapp")]
    WhatsApp,
    #[serde(rename = "viber")]
    Viber,
}

impl App {
    pub fn as_str(self) -> &'static str {
        match self {
            App::WhatsApp => "whatsapp",
            App::Viber => "viber",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoreKind {
    MessageDb,
    ContactDb,
    CallLogDb,
    ViberDataDb,
    ViberMessagesDb,
    /// SQLite file in the Viber database folder with no known name.
    UnclassifiedDb,
    MediaDir,
    AvatarDir,
    EncryptedBackup,
}

impl StoreKind {
    pub fn is_database(self) -> bool {
        matches!(
            self,
            StoreKind::MessageDb
                | StoreKind::ContactDb
                | StoreKind::CallLogDb
                | StoreKind::ViberDataDb
                | StoreKind::ViberMessagesDb
                | StoreKind::UnclassifiedDb
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StoreKind::MessageDb => "message-db",
            StoreKind::ContactDb => "contact-db",
            StoreKind::CallLogDb => "call-log-db",
            StoreKind::ViberDataDb => "viber-data-db",
            StoreKind::ViberMessagesDb => "viber-messages-db",
            StoreKind::UnclassifiedDb => "unclassified-db",
            StoreKind::MediaDir => "media-dir",
            StoreKind::AvatarDir => "avatar-dir",
            StoreKind::EncryptedBackup => "encrypted-backup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidence {
    PathAndMagic,
    PathOnly,
    MagicOnly,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::PathAndMagic => "path-and-magic",
            Confidence::PathOnly => "path-only",
            Confidence::MagicOnly => "magic-only",
        }
    }
}

/// Outcome of the SQLite magic check for an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagicCheck {
    Passed,
    Failed,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArtifactStore {
    pub app: App,
    pub kind: StoreKind,
    pub path: String,
    pub confidence: Confidence,
    /// Path says database, content disagrees.
    #[serde(default)]
    pub suspicious: bool,
}

fn segments(path: &str) -> Vec<String> {
    normalize_path(path)
        .split('/')
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ends_with(segs: &[String], tail: &[&str]) -> bool {
    segs.len() >= tail.len() && segs[segs.len() - tail.len()..].iter().zip(tail).all(|(a, b)| a == b)
}

/// Lowercase, spaces to underscores, optional `.db` dropped.
fn viber_stem(name: &str) -> String {
    let n = name.replace(' ', "_");
    n.strip_suffix(".db").map(str::to_string).unwrap_or(n)
}

fn is_sidecar_name(name: &str) -> bool {
    ["-wal", "-journal", "-shm"].iter().any(|s| name.ends_with(s))
}

/// `msgstore*.crypt*`, case-insensitive.
pub fn is_encrypted_backup_name(name: &str) -> bool {
    let n = name.to_lowercase();
    n.starts_with("msgstore") && n["msgstore".len()..].contains(".crypt")
}

/// Some segment names WhatsApp (`WhatsApp`, `com.whatsapp`, ...).
pub fn is_whatsapp_owned(path: &str) -> bool {
    segments(path).iter().any(|s| s.contains("whatsapp"))
}

pub fn in_viber_databases(path: &str) -> bool {
    let segs = segments(path);
    segs.len() >= 3 && ends_with(&segs[..segs.len() - 1], &["com.viber.voip", "databases"])
}

/// Whether `entry` could be a database store and so needs a magic sniff.
pub fn wants_sniff(entry: &FileEntry) -> bool {
    if entry.is_directory {
        return false;
    }
    match classify_path(entry, MagicCheck::NotApplicable) {
        Some(store) => store.kind.is_database(),
        None => in_viber_databases(&entry.normalized_path) && !is_sidecar_name(entry.file_name()),
    }
}

/// Classify one entry by path and, for databases, the magic-check outcome.
pub fn classify_path(entry: &FileEntry, magic: MagicCheck) -> Option<ArtifactStore> {
    let segs = segments(&entry.normalized_path);
    let name = segs.last()?.as_str();
    let store = |app, kind| {
        let db = StoreKind::is_database(kind);
        let (confidence, suspicious) = match (db, magic) {
            (true, MagicCheck::Passed) => (Confidence::PathAndMagic, false),
            (true, MagicCheck::Failed) => (Confidence::PathOnly, true),
            _ => (Confidence::PathOnly, false),
        };
        Some(ArtifactStore {
            app,
            kind,
            path: entry.normalized_path.clone(),
            confidence,
            suspicious,
        })
    };

    if entry.is_directory {
        if ends_with(&segs, &["com.whatsapp", "files", "avatars"]) {
            return store(App::WhatsApp, StoreKind::AvatarDir);
        }
        if ends_with(&segs, &["whatsapp", "media"]) {
            return store(App::WhatsApp, StoreKind::MediaDir);
        }
        return None;
    }

    if ends_with(&segs, &["com.whatsapp", "databases", "msgstore.db"]) {
        return store(App::WhatsApp, StoreKind::MessageDb);
    }
    if ends_with(&segs, &["com.whatsapp", "databases", "wa.db"]) {
        return store(App::WhatsApp, StoreKind::ContactDb);
    }
    if is_encrypted_backup_name(name) && is_whatsapp_owned(&entry.normalized_path) {
        return store(App::WhatsApp, StoreKind::EncryptedBackup);
    }
    if in_viber_databases(&entry.normalized_path) && !is_sidecar_name(name) {
        return match viber_stem(name).as_str() {
            "viber_call_log" => store(App::Viber, StoreKind::CallLogDb),
            "viber_data" => store(App::Viber, StoreKind::ViberDataDb),
            "viber_messages" => store(App::Viber, StoreKind::ViberMessagesDb),
            _ if magic == MagicCheck::Passed => Some(ArtifactStore {
                app: App::Viber,
                kind: StoreKind::UnclassifiedDb,
                path: entry.normalized_path.clone(),
                confidence: Confidence::MagicOnly,
                suspicious: false,
            }),
            _ => None,
        };
    }
    None
}

/// Classify every entry of the tree, sniffing database candidates.
pub fn scan_stores(
    tree: &ExtractionTree,
    observer: &dyn AccessObserver,
) -> Result<Vec<ArtifactStore>, IngestError> {
    let mut stores = Vec::new();
    for entry in tree.entries() {
        let magic = if wants_sniff(entry) {
            observer.record(Access::Sniff, &entry.normalized_path);
            let prefix = tree.read_prefix(entry, sqlite::HEADER_LEN)?;
            if sqlite::sniff(&prefix).is_ok() {
                MagicCheck::Passed
            } else {
                MagicCheck::Failed
            }
        } else {
            MagicCheck::NotApplicable
        };
        if let Some(store) = classify_path(entry, magic) {
            stores.push(store);
        }
    }
    stores.sort_by(|a, b| (a.app, a.kind, &a.path).cmp(&(b.app, b.kind, &b.path)));
    Ok(stores)
}

/// `-wal`, `-journal` and `-shm` files sitting next to database stores.
/// They are reported, never merged.
pub fn find_sidecars(tree: &ExtractionTree, stores: &[ArtifactStore]) -> Vec<String> {
    let mut out: Vec<String> = stores
        .iter()
        .filter(|s| s.kind.is_database())
        .flat_map(|s| ["-wal", "-journal", "-shm"].map(|suf| format!("{}{suf}", s.path)))
        .filter(|p| tree.get(p).is_some_and(|e| !e.is_directory))
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(p: &str) -> FileEntry {
        FileEntry {
            normalized_path: p.into(),
            size_bytes: 10,
            is_directory: false,
        }
    }

    fn dir(p: &str) -> FileEntry {
        FileEntry {
            normalized_path: p.into(),
            size_bytes: 0,
            is_directory: true,
        }
    }

    fn kind_of(e: &FileEntry) -> Option<(App, StoreKind)> {
        classify_path(e, MagicCheck::Passed).map(|s| (s.app, s.kind))
    }

    #[test]
    fn whatsapp_paths() {
        assert_eq!(
            kind_of(&file("data/data/com.whatsapp/databases/msgstore.db")),
            Some((App::WhatsApp, StoreKind::MessageDb))
        );
        assert_eq!(
            kind_of(&file("Data/Data/COM.WHATSAPP/Databases/Msgstore.db")),
            Some((App::WhatsApp, StoreKind::MessageDb))
        );
        assert_eq!(
            kind_of(&file("data/data/com.whatsapp/databases/wa.db")),
            Some((App::WhatsApp, StoreKind::ContactDb))
        );
        assert_eq!(
            kind_of(&dir("data/data/com.whatsapp/files/Avatars")),
            Some((App::WhatsApp, StoreKind::AvatarDir))
        );
        assert_eq!(
            kind_of(&dir("mnt/sdcard/WhatsApp/Media")),
            Some((App::WhatsApp, StoreKind::MediaDir))
        );
        assert_eq!(
            kind_of(&file("mnt/sdcard/WhatsApp/Databases/msgstore-2013-01-01.1.db.crypt")),
            Some((App::WhatsApp, StoreKind::EncryptedBackup))
        );
        assert_eq!(kind_of(&file("mnt/sdcard/WhatsApp/Media/WhatsApp Images/IMG-1.jpg")), None);
    }

    #[test]
    fn backslash_paths_match() {
        let e = file(&normalize_path("data\\data\\com.whatsapp\\databases\\msgstore.db"));
        assert_eq!(kind_of(&e), Some((App::WhatsApp, StoreKind::MessageDb)));
    }

    #[test]
    fn viber_paths() {
        assert_eq!(
            kind_of(&file("data/data/com.viber.voip/databases/viber_call_log.db")),
            Some((App::Viber, StoreKind::CallLogDb))
        );
        assert_eq!(
            kind_of(&file("data/data/com.viber.voip/databases/Viber_data")),
            Some((App::Viber, StoreKind::ViberDataDb))
        );
        assert_eq!(
            kind_of(&file("data/data/com.viber.voip/databases/viber messages")),
            Some((App::Viber, StoreKind::ViberMessagesDb))
        );
        assert_eq!(
            kind_of(&file("data/data/com.viber.voip/databases/other_thing")),
            Some((App::Viber, StoreKind::UnclassifiedDb))
        );
        assert_eq!(
            classify_path(&file("data/data/com.viber.voip/databases/other_thing"), MagicCheck::Failed),
            None
        );
        assert_eq!(kind_of(&file("data/data/com.viber.voip/databases/viber_data-journal")), None);
    }

    #[test]
    fn non_targets() {
        assert_eq!(kind_of(&file("data/data/com.example.other/databases/cache.db")), None);
        assert_eq!(kind_of(&file("msgstore.db.crypt")), None);
        assert_eq!(kind_of(&dir("data/data/com.whatsapp/databases")), None);
    }

    #[test]
    fn confidence_follows_magic() {
        let e = file("data/data/com.whatsapp/databases/msgstore.db");
        let ok = classify_path(&e, MagicCheck::Passed).unwrap();
        assert_eq!(ok.confidence, Confidence::PathAndMagic);
        assert!(!ok.suspicious);
        let bad = classify_path(&e, MagicCheck::Failed).unwrap();
        assert_eq!(bad.confidence, Confidence::PathOnly);
        assert!(bad.suspicious);
    }

    #[test]
    fn backup_name_pattern() {
        assert!(is_encrypted_backup_name("msgstore.db.crypt"));
        assert!(is_encrypted_backup_name("msgstore.db.crypt12"));
        assert!(is_encrypted_backup_name("MSGSTORE-2014-02-01.1.db.crypt7"));
        assert!(!is_encrypted_backup_name("msgstore.db"));
        assert!(!is_encrypted_backup_name("wa.db.crypt"));
    }
}
