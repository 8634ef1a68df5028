//! Hash, locate, parse and assemble: the whole triage run over one tree.

use rayon::prelude::*;
use thiserror::Error;

use crate::audit::{Access, AccessObserver};
use crate::ingest::{ExtractionTree, IngestError};
use crate::integrity::{build_manifest, EvidenceManifest};
use crate::locator::{find_sidecars, scan_stores, ArtifactStore, StoreKind};
use crate::media::{flag_encrypted_backups, index_media, resolve_media_refs};
use crate::model::{Contact, ParseError};
use crate::notes::Notes;
use crate::report::{build_timeline, CaseReport, ViberSection, WhatsAppSection, REPORT_FORMAT};
use crate::schema_map::SchemaMap;
use crate::sqlite::Database;
use crate::viber::{self, dedupe_calls, summarize_contact_activity, CallRecord, ViberMessage};
use crate::whatsapp::{self, ChatMessage, ChatThread};

pub const DEFAULT_CASE_ID: &str = "untitled";

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub case_id: String,
    pub include_raw: bool,
    pub schema_map: SchemaMap,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            case_id: DEFAULT_CASE_ID.to_string(),
            include_raw: false,
            schema_map: SchemaMap::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: CaseReport,
    pub manifest: EvidenceManifest,
    /// Damaged or unparseable stores. The report is still complete for
    /// everything else.
    pub evidence_errors: Vec<String>,
}

#[derive(Default)]
struct Parsed {
    wa_messages: Vec<ChatMessage>,
    wa_threads: Vec<ChatThread>,
    wa_contacts: Vec<Contact>,
    call_log: Vec<CallRecord>,
    data_calls: Vec<CallRecord>,
    viber_contacts: Vec<Contact>,
    viber_numbers: Vec<String>,
    viber_messages: Vec<ViberMessage>,
    notes: Notes,
    errors: Vec<String>,
}

impl Parsed {
    fn absorb(&mut self, other: Parsed) {
        self.wa_messages.extend(other.wa_messages);
        self.wa_threads.extend(other.wa_threads);
        self.wa_contacts.extend(other.wa_contacts);
        self.call_log.extend(other.call_log);
        self.data_calls.extend(other.data_calls);
        self.viber_contacts.extend(other.viber_contacts);
        self.viber_numbers.extend(other.viber_numbers);
        self.viber_messages.extend(other.viber_messages);
        self.notes.extend(other.notes);
        self.errors.extend(other.errors);
    }
}

fn parse_store(
    tree: &ExtractionTree,
    store: &ArtifactStore,
    map: &SchemaMap,
    observer: &dyn AccessObserver,
) -> Parsed {
    let mut out = Parsed::default();
    let path = store.path.as_str();
    if store.kind == StoreKind::UnclassifiedDb {
        out.notes.assume(
            "locator.unclassified",
            path,
            "SQLite file in the Viber databases folder with an unknown name; listed, not parsed",
        );
        return out;
    }
    if store.suspicious {
        out.notes.warn(path, None, "not-sqlite", "store path matched but content lacks the SQLite magic; not parsed");
        out.errors.push(format!("{path}: content is not SQLite"));
        return out;
    }
    let Some(entry) = tree.get(path) else {
        return out;
    };
    observer.record(Access::OpenDatabase, path);
    let bytes = match tree.read_entry(entry) {
        Ok(b) => b,
        Err(e) => {
            out.notes.warn(path, None, "unreadable-store", e.to_string());
            out.errors.push(e.to_string());
            return out;
        }
    };
    let db = match Database::open(&bytes) {
        Ok(db) => db,
        Err(e) => {
            out.notes.warn(path, None, "unreadable-store", e.to_string());
            out.errors.push(format!("{path}: {e}"));
            return out;
        }
    };
    if let Some(t) = db.truncation() {
        out.notes.warn(path, None, "truncated-file", t.to_string());
        out.errors.push(format!("{path}: {t}"));
    }

    let notes = &mut out.notes;
    let result: Result<(), ParseError> = (|| {
        match store.kind {
            StoreKind::MessageDb => {
                // threads first so a damaged messages table still leaves them
                match whatsapp::parse_chat_list(&db, path, map, notes) {
                    Ok(t) => out.wa_threads = t,
                    Err(e @ ParseError::MissingTable { .. }) => {
                        notes.warn(path, None, "missing-table", e.to_string())
                    }
                    Err(e) => return Err(e),
                }
                out.wa_messages = whatsapp::parse_messages(&db, path, map, notes)?;
            }
            StoreKind::ContactDb => out.wa_contacts = whatsapp::parse_contacts(&db, path, map, notes)?,
            StoreKind::CallLogDb => out.call_log = viber::parse_call_log(&db, path, map, notes)?,
            StoreKind::ViberDataDb => {
                let d = viber::parse_data_db(&db, path, map, notes)?;
                out.viber_contacts = d.contacts;
                out.viber_numbers = d.viber_numbers;
                out.data_calls = d.calls;
            }
            StoreKind::ViberMessagesDb => {
                out.viber_messages = viber::parse_messages_db(&db, path, map, notes)?
            }
            _ => {}
        }
        Ok(())
    })();
    if let Err(e) = result {
        out.notes.warn(path, None, "unparsed-store", e.to_string());
        out.errors.push(e.to_string());
    }
    for d in out.notes.damage.iter().filter(|d| d.store_path == path) {
        out.errors.push(format!(
            "{path}: table {} damaged after {} rows: {}",
            d.table, d.rows_recovered, d.error
        ));
    }
    out
}

/// Full run: manifest first, then store discovery and parsing.
pub fn run_parse(
    tree: &ExtractionTree,
    opts: &ParseOptions,
    observer: &dyn AccessObserver,
) -> Result<Outcome, PipelineError> {
    let manifest = build_manifest(tree, observer)?;
    let stores = scan_stores(tree, observer)?;
    let sidecars = find_sidecars(tree, &stores);

    let per_store: Vec<Parsed> = stores
        .par_iter()
        .filter(|s| s.kind.is_database())
        .map(|s| parse_store(tree, s, &opts.schema_map, observer))
        .collect();
    let mut all = Parsed::default();
    for p in per_store {
        all.absorb(p);
    }
    for sc in &sidecars {
        all.notes.warn(sc, None, "sidecar-not-merged", "journal or WAL file present; its pages are not applied");
    }

    let index = index_media(tree);
    let media_refs = resolve_media_refs(&all.wa_messages, &index);
    let encrypted_backups = flag_encrypted_backups(tree, observer)?;

    let mut calls = std::mem::take(&mut all.call_log);
    calls.append(&mut all.data_calls);
    let mut calls = dedupe_calls(calls, &mut all.notes);
    let summaries = summarize_contact_activity(&calls, &all.viber_messages);
    let timeline = build_timeline(&all.wa_messages, &calls, &all.viber_messages);

    if !opts.include_raw {
        all.wa_messages.iter_mut().for_each(|m| m.raw_cells.clear());
        all.viber_messages.iter_mut().for_each(|m| m.raw_cells.clear());
        calls.iter_mut().for_each(|c| c.raw_cells.clear());
    }
    let mut notes = all.notes;
    notes.sort();

    let report = CaseReport {
        report_format: REPORT_FORMAT,
        case_id: opts.case_id.clone(),
        manifest_digest: manifest.tree_digest.clone(),
        stores,
        sidecars,
        whatsapp: WhatsAppSection {
            messages: all.wa_messages,
            threads: all.wa_threads,
            contacts: all.wa_contacts,
            media_refs,
            encrypted_backups,
        },
        viber: ViberSection {
            calls,
            messages: all.viber_messages,
            contacts: all.viber_contacts,
            viber_numbers: all.viber_numbers,
            summaries,
        },
        timeline,
        warnings: notes.warnings,
        assumptions: notes.assumptions.into_iter().collect(),
        damage: notes.damage,
    };
    let mut evidence_errors = all.errors;
    evidence_errors.sort();
    evidence_errors.dedup();
    Ok(Outcome {
        report,
        manifest,
        evidence_errors,
    })
}
