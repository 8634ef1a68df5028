//! Read-only view over an acquired filesystem extraction.
//!
//! An extraction is either a plain directory or a POSIX tar archive. Both are
//! presented as the same sorted list of [`FileEntry`] values with normalized
//! `/`-separated relative paths, so every later stage is indifferent to how
//! the evidence was packaged. Nothing in this module ever writes to the
//! source.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use globset::GlobBuilder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling for loading a whole entry into memory.
pub const DEFAULT_LOAD_CAP: u64 = 256 * 1024 * 1024;

const TAR_BLOCK: u64 = 512;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("extraction source not found: {0}")]
    NotFound(PathBuf),
    #[error("{0} is neither a directory nor a tar archive")]
    UnsupportedContainer(PathBuf),
    #[error("corrupt tar archive at byte offset {offset}: {reason}")]
    CorruptArchive { offset: u64, reason: String },
    #[error("bad glob pattern {pattern:?}: {reason}")]
    BadPattern { pattern: String, reason: String },
    #[error("entry {path} vanished or changed on disk ({reason}); evidence may be contaminated")]
    EntryVanished { path: String, reason: String },
    #[error("entry {0} is not part of this extraction")]
    NotInTree(String),
    #[error("entry {0} is a directory")]
    IsDirectory(String),
    #[error("entry {path} is {size} bytes, above the load cap of {cap} bytes")]
    EntryTooLarge { path: String, size: u64, cap: u64 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Directory,
    TarArchive,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FileEntry {
    pub normalized_path: String,
    pub size_bytes: u64,
    pub is_directory: bool,
}

impl FileEntry {
    /// Final path segment.
    pub fn file_name(&self) -> &str {
        self.normalized_path
            .rsplit('/')
            .next()
            .unwrap_or(&self.normalized_path)
    }
}

/// A symbolic or hard link found in the extraction. Links are recorded, never followed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkEntry {
    pub normalized_path: String,
    pub target: String,
}

#[derive(Debug, Clone)]
enum Backing {
    Directory(PathBuf),
    Tar {
        archive: PathBuf,
        data_offsets: BTreeMap<String, u64>,
    },
}

/// Immutable, sorted view of an extraction.
#[derive(Debug, Clone)]
pub struct ExtractionTree {
    source_kind: SourceKind,
    root_label: String,
    entries: Vec<FileEntry>,
    links: Vec<LinkEntry>,
    anomalies: Vec<String>,
    backing: Backing,
    load_cap: u64,
}

/// Normalize a path to `/` separators with no empty, `.` or `..` segments.
///
/// `..` pops the previous segment and saturates at the root, so the result
/// never escapes the extraction.
pub fn normalize_path(raw: &str) -> String {
    let mut segments: Vec<&str> = Vec::new();
    for seg in raw.split(['/', '\\']) {
        match seg {
            "" | "." => {}
            ".." => {
                segments.pop();
            }
            other => segments.push(other),
        }
    }
    segments.join("/")
}

fn escapes_root(raw: &str) -> bool {
    let mut depth: i64 = 0;
    for seg in raw.split(['/', '\\']) {
        match seg {
            "" | "." => {}
            ".." => {
                depth -= 1;
                if depth < 0 {
                    return true;
                }
            }
            _ => depth += 1,
        }
    }
    false
}

/// Open a directory or tar archive as an [`ExtractionTree`].
pub fn open_extraction(path: &Path) -> Result<ExtractionTree> {
    ExtractionTree::open(path)
}

impl ExtractionTree {
    pub fn open(path: &Path) -> Result<Self> {
        let meta = fs::metadata(path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => IngestError::NotFound(path.to_path_buf()),
            _ => IngestError::Io {
                path: path.display().to_string(),
                source: e,
            },
        })?;
        let root_label = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        if meta.is_dir() {
            open_directory(path, root_label)
        } else if meta.is_file() && looks_like_tar(path)? {
            open_tar(path, root_label)
        } else {
            Err(IngestError::UnsupportedContainer(path.to_path_buf()))
        }
    }

    pub fn source_kind(&self) -> SourceKind {
        self.source_kind
    }

    pub fn root_label(&self) -> &str {
        &self.root_label
    }

    /// All entries, directories included, in normalized path order.
    pub fn entries(&self) -> &[FileEntry] {
        &self.entries
    }

    /// Regular files only.
    pub fn files(&self) -> impl Iterator<Item = &FileEntry> {
        self.entries.iter().filter(|e| !e.is_directory)
    }

    pub fn links(&self) -> &[LinkEntry] {
        &self.links
    }

    /// Oddities noticed while opening (duplicate tar members, skipped special files).
    pub fn anomalies(&self) -> &[String] {
        &self.anomalies
    }

    pub fn load_cap(&self) -> u64 {
        self.load_cap
    }

    pub fn with_load_cap(mut self, cap: u64) -> Self {
        self.load_cap = cap;
        self
    }

    pub fn get(&self, normalized_path: &str) -> Option<&FileEntry> {
        self.entries
            .binary_search_by(|e| e.normalized_path.as_str().cmp(normalized_path))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn contains(&self, normalized_path: &str) -> bool {
        self.get(normalized_path).is_some()
    }

    /// Entries matching `glob` (all entries when `None`), in sorted order.
    pub fn list_entries(&self, glob: Option<&str>) -> Result<Vec<FileEntry>> {
        let Some(pattern) = glob else {
            return Ok(self.entries.clone());
        };
        let matcher = GlobBuilder::new(pattern)
            .literal_separator(true)
            .build()
            .map_err(|e| IngestError::BadPattern {
                pattern: pattern.to_string(),
                reason: e.kind().to_string(),
            })?
            .compile_matcher();
        Ok(self
            .entries
            .iter()
            .filter(|e| matcher.is_match(&e.normalized_path))
            .cloned()
            .collect())
    }

    fn check_member(&self, entry: &FileEntry) -> Result<()> {
        match self.get(&entry.normalized_path) {
            Some(known) if known == entry => {}
            _ => return Err(IngestError::NotInTree(entry.normalized_path.clone())),
        }
        if entry.is_directory {
            return Err(IngestError::IsDirectory(entry.normalized_path.clone()));
        }
        Ok(())
    }

    /// Stream an entry's content without loading it whole.
    pub fn open_entry(&self, entry: &FileEntry) -> Result<Box<dyn Read + Send>> {
        self.check_member(entry)?;
        let io_err = |source| IngestError::Io {
            path: entry.normalized_path.clone(),
            source,
        };
        match &self.backing {
            Backing::Directory(root) => {
                let full = root.join(&entry.normalized_path);
                let file = File::open(&full).map_err(|e| vanished(entry, e))?;
                let len = file.metadata().map_err(io_err)?.len();
                if len != entry.size_bytes {
                    return Err(IngestError::EntryVanished {
                        path: entry.normalized_path.clone(),
                        reason: format!("size changed from {} to {len}", entry.size_bytes),
                    });
                }
                Ok(Box::new(file.take(entry.size_bytes)))
            }
            Backing::Tar {
                archive,
                data_offsets,
            } => {
                let offset = data_offsets
                    .get(&entry.normalized_path)
                    .copied()
                    .ok_or_else(|| IngestError::NotInTree(entry.normalized_path.clone()))?;
                let mut file = File::open(archive).map_err(|e| vanished(entry, e))?;
                file.seek(SeekFrom::Start(offset)).map_err(io_err)?;
                Ok(Box::new(file.take(entry.size_bytes)))
            }
        }
    }

    /// Load an entry fully. Refuses entries above the load cap.
    pub fn read_entry(&self, entry: &FileEntry) -> Result<Vec<u8>> {
        self.check_member(entry)?;
        if entry.size_bytes > self.load_cap {
            return Err(IngestError::EntryTooLarge {
                path: entry.normalized_path.clone(),
                size: entry.size_bytes,
                cap: self.load_cap,
            });
        }
        let mut reader = self.open_entry(entry)?;
        let mut buf = Vec::with_capacity(entry.size_bytes as usize);
        reader.read_to_end(&mut buf).map_err(|e| IngestError::Io {
            path: entry.normalized_path.clone(),
            source: e,
        })?;
        if buf.len() as u64 != entry.size_bytes {
            return Err(IngestError::EntryVanished {
                path: entry.normalized_path.clone(),
                reason: format!("expected {} bytes, read {}", entry.size_bytes, buf.len()),
            });
        }
        Ok(buf)
    }

    /// Read at most `n` leading bytes of an entry.
    pub fn read_prefix(&self, entry: &FileEntry, n: usize) -> Result<Vec<u8>> {
        let mut reader = self.open_entry(entry)?.take(n as u64);
        let mut buf = Vec::with_capacity(n);
        reader.read_to_end(&mut buf).map_err(|e| IngestError::Io {
            path: entry.normalized_path.clone(),
            source: e,
        })?;
        Ok(buf)
    }
}

fn vanished(entry: &FileEntry, e: io::Error) -> IngestError {
    IngestError::EntryVanished {
        path: entry.normalized_path.clone(),
        reason: e.to_string(),
    }
}

/// Adds every ancestor directory of `path` so directory and tar ingestion agree
/// even when an archive omits explicit directory members.
fn add_parents(path: &str, dirs: &mut BTreeSet<String>) {
    let mut end = 0;
    while let Some(pos) = path[end..].find('/') {
        end += pos;
        dirs.insert(path[..end].to_string());
        end += 1;
    }
}

fn assemble(
    files: BTreeMap<String, u64>,
    mut dirs: BTreeSet<String>,
    links: &BTreeMap<String, String>,
    anomalies: &mut Vec<String>,
) -> (Vec<FileEntry>, Vec<LinkEntry>) {
    for path in files.keys().chain(links.keys()) {
        add_parents(path, &mut dirs);
    }
    for d in dirs.clone() {
        add_parents(&d, &mut dirs);
    }
    let mut entries: Vec<FileEntry> = Vec::with_capacity(files.len() + dirs.len());
    for d in dirs {
        if files.contains_key(&d) {
            anomalies.push(format!("{d} recorded both as file and directory"));
            continue;
        }
        entries.push(FileEntry {
            normalized_path: d,
            size_bytes: 0,
            is_directory: true,
        });
    }
    entries.extend(files.into_iter().map(|(p, size)| FileEntry {
        normalized_path: p,
        size_bytes: size,
        is_directory: false,
    }));
    entries.sort_by(|a, b| a.normalized_path.as_bytes().cmp(b.normalized_path.as_bytes()));
    let links = links
        .iter()
        .map(|(p, t)| LinkEntry {
            normalized_path: p.clone(),
            target: t.clone(),
        })
        .collect();
    (entries, links)
}

fn open_directory(root: &Path, root_label: String) -> Result<ExtractionTree> {
    let mut files = BTreeMap::new();
    let mut dirs = BTreeSet::new();
    let mut links = BTreeMap::new();
    let mut anomalies = Vec::new();
    let mut stack = vec![(root.to_path_buf(), String::new())];
    while let Some((dir, rel)) = stack.pop() {
        let io_err = |source| IngestError::Io {
            path: dir.display().to_string(),
            source,
        };
        for item in fs::read_dir(&dir).map_err(io_err)? {
            let item = item.map_err(io_err)?;
            let raw_name = item.file_name();
            let name = match raw_name.to_str() {
                Some(n) => n.to_string(),
                None => {
                    let lossy = raw_name.to_string_lossy().into_owned();
                    anomalies.push(format!("non-UTF-8 file name recorded lossily: {lossy}"));
                    lossy
                }
            };
            let child_rel = if rel.is_empty() {
                normalize_path(&name)
            } else {
                format!("{rel}/{}", normalize_path(&name))
            };
            let meta = fs::symlink_metadata(item.path()).map_err(io_err)?;
            let ft = meta.file_type();
            if ft.is_symlink() {
                let target = fs::read_link(item.path())
                    .map(|t| t.to_string_lossy().into_owned())
                    .unwrap_or_default();
                links.insert(child_rel, target);
            } else if ft.is_dir() {
                dirs.insert(child_rel.clone());
                stack.push((item.path(), child_rel));
            } else if ft.is_file() {
                files.insert(child_rel, meta.len());
            } else {
                anomalies.push(format!("special file skipped: {child_rel}"));
            }
        }
    }
    let (entries, links) = assemble(files, dirs, &links, &mut anomalies);
    Ok(ExtractionTree {
        source_kind: SourceKind::Directory,
        root_label,
        entries,
        links,
        anomalies,
        backing: Backing::Directory(root.to_path_buf()),
        load_cap: DEFAULT_LOAD_CAP,
    })
}

fn looks_like_tar(path: &Path) -> Result<bool> {
    let io_err = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = File::open(path).map_err(io_err)?;
    let len = file.metadata().map_err(io_err)?.len();
    if len < TAR_BLOCK {
        return Ok(false);
    }
    let mut block = [0u8; TAR_BLOCK as usize];
    file.read_exact(&mut block).map_err(io_err)?;
    if block.iter().all(|&b| b == 0) {
        return Ok(len % TAR_BLOCK == 0);
    }
    if &block[257..262] == b"ustar" {
        return Ok(true);
    }
    Ok(header_checksum_ok(&block))
}

fn header_checksum_ok(block: &[u8; 512]) -> bool {
    let stored = std::str::from_utf8(&block[148..156])
        .ok()
        .map(|s| s.trim_matches(|c: char| c == '\0' || c == ' '))
        .and_then(|s| u32::from_str_radix(s, 8).ok());
    let computed: u32 = block
        .iter()
        .enumerate()
        .map(|(i, &b)| if (148..156).contains(&i) { 32 } else { b as u32 })
        .sum();
    stored == Some(computed)
}

fn open_tar(path: &Path, root_label: String) -> Result<ExtractionTree> {
    let io_err = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let archive_len = file.metadata().map_err(io_err)?.len();
    let mut archive = tar::Archive::new(file);
    let mut files = BTreeMap::new();
    let mut dirs = BTreeSet::new();
    let mut links = BTreeMap::new();
    let mut data_offsets = BTreeMap::new();
    let mut anomalies = Vec::new();
    let mut next_offset = 0u64;

    let corrupt = |offset: u64, reason: String| IngestError::CorruptArchive { offset, reason };
    let iter = archive
        .entries()
        .map_err(|e| corrupt(0, e.to_string()))?;
    for item in iter {
        let entry = item.map_err(|e| corrupt(next_offset, e.to_string()))?;
        let header_pos = entry.raw_header_position();
        let data_pos = entry.raw_file_position();
        let size = entry.header().entry_size().map_err(|e| corrupt(header_pos, e.to_string()))?;
        if data_pos + size > archive_len {
            return Err(corrupt(
                header_pos,
                format!("member data runs past end of archive ({} > {archive_len})", data_pos + size),
            ));
        }
        next_offset = data_pos + size.div_ceil(TAR_BLOCK) * TAR_BLOCK;

        let raw_path = entry.path_bytes();
        let raw_path = String::from_utf8_lossy(&raw_path).into_owned();
        if escapes_root(&raw_path) {
            return Err(corrupt(header_pos, format!("member {raw_path:?} escapes the archive root")));
        }
        let norm = normalize_path(&raw_path);
        let kind = entry.header().entry_type();
        if norm.is_empty() {
            continue;
        }
        if kind.is_file() || kind == tar::EntryType::Continuous {
            if files.insert(norm.clone(), size).is_some() {
                anomalies.push(format!("duplicate archive member {norm}; last copy kept"));
            }
            data_offsets.insert(norm, data_pos);
        } else if kind.is_dir() {
            dirs.insert(norm);
        } else if kind.is_symlink() || kind.is_hard_link() {
            let target = entry
                .link_name_bytes()
                .map(|t| String::from_utf8_lossy(&t).into_owned())
                .unwrap_or_default();
            links.insert(norm, target);
        } else if kind.is_pax_global_extensions() {
            continue;
        } else {
            anomalies.push(format!("unsupported archive member type {kind:?} skipped: {norm}"));
        }
    }
    let (entries, links) = assemble(files, dirs, &links, &mut anomalies);
    Ok(ExtractionTree {
        source_kind: SourceKind::TarArchive,
        root_label,
        entries,
        links,
        anomalies,
        backing: Backing::Tar {
            archive: path.to_path_buf(),
            data_offsets,
        },
        load_cap: DEFAULT_LOAD_CAP,
    })
}
