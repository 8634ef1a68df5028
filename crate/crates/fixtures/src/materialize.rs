//! Generated scenario to files on disk, and a reproducible tar of them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use imtriage_core::audit::NoAudit;
use imtriage_core::ingest::ExtractionTree;
use imtriage_core::integrity::build_manifest;
use imtriage_core::report::{emit_report, CaseReport, Format};
use thiserror::Error;
use walkdir::WalkDir;

use crate::generate::{Content, Generated};

#[derive(Debug, Error)]
pub enum MaterializeError {
    #[error("SQLite engine not available in this build; use the committed golden tree")]
    EngineUnavailable,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: script failed: {reason}")]
    Script { path: String, reason: String },
    #[error("destination {0} is not empty")]
    NotEmpty(PathBuf),
    #[error("finalizing expected report: {0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> MaterializeError + '_ {
    move |source| MaterializeError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct Materialized {
    pub root: PathBuf,
    pub manifest_digest: String,
    /// The expected report with its manifest digest filled in.
    pub expected: CaseReport,
    /// `expected` as the JSON emitter renders it.
    pub expected_json: Vec<u8>,
}

/// Whether [`materialize`] can build database files.
pub fn engine_available() -> bool {
    cfg!(feature = "engine")
}

#[cfg(feature = "engine")]
fn build_db(path: &Path, script: &str) -> Result<(), MaterializeError> {
    let fail = |e: rusqlite::Error| MaterializeError::Script {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    let conn = rusqlite::Connection::open(path).map_err(fail)?;
    conn.execute_batch(script).map_err(fail)?;
    conn.close().map_err(|(_, e)| fail(e))
}

#[cfg(not(feature = "engine"))]
fn build_db(_: &Path, _: &str) -> Result<(), MaterializeError> {
    Err(MaterializeError::EngineUnavailable)
}

/// Write every layout entry under `dest`, which must be absent or empty.
pub fn materialize(generated: &Generated, dest: &Path) -> Result<Materialized, MaterializeError> {
    if dest.exists() {
        if fs::read_dir(dest).map_err(io_err(dest))?.next().is_some() {
            return Err(MaterializeError::NotEmpty(dest.to_path_buf()));
        }
    } else {
        fs::create_dir_all(dest).map_err(io_err(dest))?;
    }
    for entry in &generated.layout {
        let path = dest.join(&entry.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        match &entry.content {
            Content::Bytes(b) => fs::write(&path, b).map_err(io_err(&path))?,
            Content::Sqlite => {
                let script = generated.scripts.get(&entry.path).ok_or_else(|| MaterializeError::Script {
                    path: entry.path.clone(),
                    reason: "no script for this store".into(),
                })?;
                build_db(&path, script)?;
            }
        }
    }
    let tree = ExtractionTree::open(dest).map_err(|e| MaterializeError::Report(e.to_string()))?;
    let manifest = build_manifest(&tree, &NoAudit).map_err(|e| MaterializeError::Report(e.to_string()))?;
    let mut expected = generated.expected.clone();
    expected.manifest_digest = manifest.tree_digest.clone();
    let emitted = emit_report(&expected, Format::Json).map_err(|e| MaterializeError::Report(e.to_string()))?;
    let expected_json = emitted.files.into_iter().next().map(|(_, b)| b).unwrap_or_default();
    Ok(Materialized {
        root: dest.to_path_buf(),
        manifest_digest: manifest.tree_digest,
        expected,
        expected_json,
    })
}

/// Tar `src` with sorted entries, zero mtimes and fixed owners and modes,
/// so equal trees give equal bytes.
pub fn write_tar(src: &Path, out: &Path) -> Result<(), MaterializeError> {
    let file = fs::File::create(out).map_err(io_err(out))?;
    let mut builder = tar::Builder::new(io::BufWriter::new(file));
    for item in WalkDir::new(src).min_depth(1).sort_by_file_name() {
        let item = item.map_err(|e| MaterializeError::Io {
            path: src.display().to_string(),
            source: e.into(),
        })?;
        let rel: Vec<String> = item
            .path()
            .strip_prefix(src)
            .expect("walk stays under its root")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let rel = rel.join("/");
        let mut header = tar::Header::new_gnu();
        header.set_mtime(0);
        header.set_uid(0);
        header.set_gid(0);
        if item.file_type().is_dir() {
            header.set_entry_type(tar::EntryType::Directory);
            header.set_mode(0o755);
            header.set_size(0);
            builder
                .append_data(&mut header, format!("{rel}/"), io::empty())
                .map_err(io_err(item.path()))?;
        } else {
            let bytes = fs::read(item.path()).map_err(io_err(item.path()))?;
            header.set_entry_type(tar::EntryType::Regular);
            header.set_mode(0o644);
            header.set_size(bytes.len() as u64);
            builder
                .append_data(&mut header, &rel, bytes.as_slice())
                .map_err(io_err(item.path()))?;
        }
    }
    builder
        .into_inner()
        .and_then(|mut w| io::Write::flush(&mut w))
        .map_err(io_err(out))
}
