//! Media inventory, message attachment resolution and encrypted backups.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::audit::{Access, AccessObserver};
use crate::ingest::{ExtractionTree, IngestError};
use crate::integrity::hash_entry;
use crate::locator::{is_encrypted_backup_name, is_whatsapp_owned};
use crate::model::Provenance;
use crate::sqlite;
use crate::whatsapp::ChatMessage;

/// Terminal file name to every path carrying it.
pub type MediaIndex = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefStatus {
    Resolved,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MediaRef {
    pub message: Provenance,
    pub media_name: String,
    /// Every indexed file with exactly this name.
    pub resolved_paths: Vec<String>,
    pub status: RefStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EncryptedBackupRef {
    pub path: String,
    pub size_bytes: u64,
    pub sha256_hex: String,
    pub classification: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn is_media_path(path: &str) -> bool {
    let segs: Vec<String> = path.split('/').map(str::to_lowercase).collect();
    let parents = &segs[..segs.len().saturating_sub(1)];
    parents.windows(2).any(|w| w[0] == "whatsapp" && w[1] == "media")
        || parents
            .windows(3)
            .any(|w| w[0] == "com.whatsapp" && w[1] == "files" && w[2] == "avatars")
}

/// Files under a `WhatsApp/Media` or `com.whatsapp/files/Avatars` segment,
/// keyed by file name.
pub fn index_media(tree: &ExtractionTree) -> MediaIndex {
    let mut index = MediaIndex::new();
    for e in tree.files().filter(|e| is_media_path(&e.normalized_path)) {
        index
            .entry(e.file_name().to_string())
            .or_default()
            .push(e.normalized_path.clone());
    }
    index
}

/// Exact-name lookup of each message's media name.
pub fn resolve_media_refs(messages: &[ChatMessage], index: &MediaIndex) -> Vec<MediaRef> {
    messages
        .iter()
        .filter_map(|m| {
            let name = m.media_name.as_ref()?;
            let paths = index.get(name).cloned().unwrap_or_default();
            Some(MediaRef {
                message: Provenance {
                    store_path: m.store_path.clone(),
                    rowid: m.rowid,
                },
                media_name: name.clone(),
                status: if paths.is_empty() {
                    RefStatus::Unresolved
                } else {
                    RefStatus::Resolved
                },
                resolved_paths: paths,
            })
        })
        .collect()
}

/// `msgstore*.crypt*` files in WhatsApp-owned paths. Only size, digest and
/// the leading bytes are read; the content is never parsed.
pub fn flag_encrypted_backups(
    tree: &ExtractionTree,
    observer: &dyn AccessObserver,
) -> Result<Vec<EncryptedBackupRef>, IngestError> {
    let mut out = Vec::new();
    for e in tree.files() {
        if !is_encrypted_backup_name(e.file_name()) || !is_whatsapp_owned(&e.normalized_path) {
            continue;
        }
        observer.record(Access::Peek, &e.normalized_path);
        let prefix = tree.read_prefix(e, sqlite::MAGIC.len())?;
        let note = (prefix == sqlite::MAGIC).then(|| {
            "content starts with the plain SQLite magic despite the encrypted-backup name; not opened"
                .to_string()
        });
        observer.record(Access::Hash, &e.normalized_path);
        out.push(EncryptedBackupRef {
            path: e.normalized_path.clone(),
            size_bytes: e.size_bytes,
            sha256_hex: hash_entry(tree, e)?,
            classification: "encrypted-chat-backup".into(),
            note,
        });
    }
    Ok(out)
}
