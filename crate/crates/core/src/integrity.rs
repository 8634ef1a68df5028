//! SHA-256 evidence manifests.
//!
//! Manifest file layout (UTF-8, `\n` line ends, trailing newline):
//!
//! ```text
//! imtriage-manifest\t1
//! created_at_utc\t2013-01-01T12:00:00Z
//! tool_version\t0.1.0
//! tree_digest\t<64 hex>
//! <path>\t<size>\t<64 hex>
//! ...
//! ```
//!
//! Records are sorted by path (byte order). In paths, `\` is written `\\`, tab
//! `\t`, newline `\n` and carriage return `\r`. `tree_digest` is the SHA-256 of
//! the record lines exactly as written, so the header never affects it.

use std::collections::BTreeMap;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audit::{Access, AccessObserver};
use crate::ingest::{ExtractionTree, FileEntry, IngestError};
use crate::timestamp::format_epoch_millis;

const MAGIC_LINE: &str = "imtriage-manifest\t1";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub size_bytes: u64,
    pub sha256_hex: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceManifest {
    pub created_at_utc: String,
    pub tool_version: String,
    pub entries: Vec<ManifestEntry>,
    pub tree_digest: String,
}

#[derive(Debug, Error)]
pub enum IntegrityError {
    #[error("malformed manifest, line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum EntryStatus {
    Match,
    Mismatch {
        expected_size: u64,
        actual_size: u64,
        expected_sha256: String,
        actual_sha256: String,
    },
    Missing,
    Extra,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryCheck {
    pub path: String,
    #[serde(flatten)]
    pub status: EntryStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub passed: bool,
    /// Every manifest entry and every extra file, by path.
    pub checks: Vec<EntryCheck>,
}

impl Verification {
    pub fn failures(&self) -> impl Iterator<Item = &EntryCheck> {
        self.checks.iter().filter(|c| c.status != EntryStatus::Match)
    }
}

/// Streaming SHA-256 of one file entry, lowercase hex.
pub fn hash_entry(tree: &ExtractionTree, entry: &FileEntry) -> Result<String, IngestError> {
    let mut reader = tree.open_entry(entry)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buf).map_err(|e| IngestError::Io {
            path: entry.normalized_path.clone(),
            source: e,
        })?;
        if n == 0 {
            break;
        }
        total += n as u64;
        hasher.update(&buf[..n]);
    }
    if total != entry.size_bytes {
        return Err(IngestError::EntryVanished {
            path: entry.normalized_path.clone(),
            reason: format!("expected {} bytes, read {total}", entry.size_bytes),
        });
    }
    Ok(hex::encode(hasher.finalize()))
}

fn escape_path(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    for c in path.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_path(text: &str) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

fn record_line(e: &ManifestEntry) -> String {
    format!("{}\t{}\t{}\n", escape_path(&e.path), e.size_bytes, e.sha256_hex)
}

/// Digest over the canonical record lines.
pub fn tree_digest(entries: &[ManifestEntry]) -> String {
    let mut hasher = Sha256::new();
    for e in entries {
        hasher.update(record_line(e).as_bytes());
    }
    hex::encode(hasher.finalize())
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

fn now_millis() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

/// Hash every file of the tree in parallel. Any unreadable entry aborts.
pub fn build_manifest(
    tree: &ExtractionTree,
    observer: &dyn AccessObserver,
) -> Result<EvidenceManifest, IngestError> {
    let files: Vec<&FileEntry> = tree.files().collect();
    let mut entries = files
        .par_iter()
        .map(|e| {
            observer.record(Access::Hash, &e.normalized_path);
            Ok(ManifestEntry {
                path: e.normalized_path.clone(),
                size_bytes: e.size_bytes,
                sha256_hex: hash_entry(tree, e)?,
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    entries.sort();
    let tree_digest = tree_digest(&entries);
    Ok(EvidenceManifest {
        created_at_utc: format_epoch_millis(now_millis()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        entries,
        tree_digest,
    })
}

impl EvidenceManifest {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MAGIC_LINE}\ncreated_at_utc\t{}\ntool_version\t{}\ntree_digest\t{}\n",
            self.created_at_utc, self.tool_version, self.tree_digest
        );
        for e in &self.entries {
            out.push_str(&record_line(e));
        }
        out
    }

    /// Parse and check a manifest: field shapes, order and the tree digest.
    pub fn parse(text: &str) -> Result<Self, IntegrityError> {
        let bad = |line: usize, reason: &str| IntegrityError::MalformedManifest {
            line,
            reason: reason.to_string(),
        };
        let Some(body) = text.strip_suffix('\n') else {
            return Err(bad(text.split('\n').count(), "missing trailing newline"));
        };
        let lines: Vec<&str> = body.split('\n').collect();
        if lines.first() != Some(&MAGIC_LINE) {
            return Err(bad(1, "not an imtriage manifest"));
        }
        let header = |i: usize, key: &str| -> Result<String, IntegrityError> {
            match lines.get(i).and_then(|l| l.split_once('\t')) {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(bad(i + 1, &format!("expected {key}"))),
            }
        };
        let created_at_utc = header(1, "created_at_utc")?;
        let tool_version = header(2, "tool_version")?;
        let tree_digest_text = header(3, "tree_digest")?;
        if !is_sha256_hex(&tree_digest_text) {
            return Err(bad(4, "tree_digest is not 64 lowercase hex digits"));
        }

        let mut entries: Vec<ManifestEntry> = Vec::new();
        for (i, line) in lines.iter().enumerate().skip(4) {
            let n = i + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            let [path, size, digest] = fields[..] else {
                return Err(bad(n, "expected path, size and digest separated by tabs"));
            };
            let path = unescape_path(path).ok_or_else(|| bad(n, "bad escape in path"))?;
            let size_bytes: u64 = size.parse().map_err(|_| bad(n, "size is not an integer"))?;
            if !is_sha256_hex(digest) {
                return Err(bad(n, "digest is not 64 lowercase hex digits"));
            }
            if let Some(prev) = entries.last() {
                if prev.path >= path {
                    return Err(bad(n, "records not strictly sorted by path"));
                }
            }
            entries.push(ManifestEntry {
                path,
                size_bytes,
                sha256_hex: digest.to_string(),
            });
        }
        if tree_digest(&entries) != tree_digest_text {
            return Err(bad(4, "tree_digest does not match the records"));
        }
        Ok(EvidenceManifest {
            created_at_utc,
            tool_version,
            entries,
            tree_digest: tree_digest_text,
        })
    }
}

/// Compare the tree against a manifest. Passes iff every entry matches and
/// the tree holds no extra files.
pub fn verify_manifest(
    tree: &ExtractionTree,
    manifest: &EvidenceManifest,
    observer: &dyn AccessObserver,
) -> Result<Verification, IntegrityError> {
    if tree_digest(&manifest.entries) != manifest.tree_digest {
        return Err(IntegrityError::MalformedManifest {
            line: 4,
            reason: "tree_digest does not match the records".into(),
        });
    }
    let expected: BTreeMap<&str, &ManifestEntry> =
        manifest.entries.iter().map(|e| (e.path.as_str(), e)).collect();

    let mut checks = manifest
        .entries
        .par_iter()
        .map(|want| {
            let status = match tree.get(&want.path).filter(|e| !e.is_directory) {
                None => EntryStatus::Missing,
                Some(entry) => {
                    observer.record(Access::Hash, &entry.normalized_path);
                    let actual = hash_entry(tree, entry)?;
                    if actual == want.sha256_hex && entry.size_bytes == want.size_bytes {
                        EntryStatus::Match
                    } else {
                        EntryStatus::Mismatch {
                            expected_size: want.size_bytes,
                            actual_size: entry.size_bytes,
                            expected_sha256: want.sha256_hex.clone(),
                            actual_sha256: actual,
                        }
                    }
                }
            };
            Ok(EntryCheck {
                path: want.path.clone(),
                status,
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    checks.extend(
        tree.files()
            .filter(|e| !expected.contains_key(e.normalized_path.as_str()))
            .map(|e| EntryCheck {
                path: e.normalized_path.clone(),
                status: EntryStatus::Extra,
            }),
    );
    checks.sort_by(|a, b| a.path.cmp(&b.path));
    let passed = checks.iter().all(|c| c.status == EntryStatus::Match);
    Ok(Verification { passed, checks })
}
