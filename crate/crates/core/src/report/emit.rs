use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::CaseReport;
use crate::media::RefStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported report format {0:?} (expected json, csv or text)")]
    UnsupportedFormat(String),
    #[error("cannot encode report: {0}")]
    Encode(String),
    #[error("cannot read report: {0}")]
    Decode(String),
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            _ => Err(ReportError::UnsupportedFormat(s.to_string())),
        }
    }
}

/// Output files: one for json and text, one per section for csv.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emitted {
    pub files: Vec<(String, Vec<u8>)>,
}

impl CaseReport {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ReportError> {
        serde_json::from_slice(bytes).map_err(|e| ReportError::Decode(e.to_string()))
    }
}

pub fn emit_report(report: &CaseReport, format: Format) -> Result<Emitted, ReportError> {
    let files = match format {
        Format::Json => vec![("report.json".to_string(), json(report)?)],
        Format::Csv => csv_files(report)?,
        Format::Text => vec![("report.txt".to_string(), text(report).into_bytes())],
    };
    Ok(Emitted { files })
}

/// Pretty JSON with keys sorted at every level and a trailing newline.
fn json(report: &CaseReport) -> Result<Vec<u8>, ReportError> {
    // Going through Value sorts object keys: serde_json's map is ordered.
    let value = serde_json::to_value(report).map_err(|e| ReportError::Encode(e.to_string()))?;
    let mut out = serde_json::to_vec_pretty(&value).map_err(|e| ReportError::Encode(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn table(headers: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, ReportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let enc = |e: csv::Error| ReportError::Encode(e.to_string());
    w.write_record(headers).map_err(enc)?;
    for row in rows {
        w.write_record(&row).map_err(enc)?;
    }
    w.into_inner().map_err(|e| ReportError::Encode(e.to_string()))
}

fn csv_files(r: &CaseReport) -> Result<Vec<(String, Vec<u8>)>, ReportError> {
    let wa = &r.whatsapp;
    let vb = &r.viber;
    let mut files = Vec::new();
    let mut add = |name: &str, headers: &[&str], rows: Vec<Vec<String>>| -> Result<(), ReportError> {
        files.push((format!("{name}.csv"), table(headers, rows)?));
        Ok(())
    };

    add(
        "stores",
        &["app", "kind", "path", "confidence", "suspicious"],
        r.stores
            .iter()
            .map(|s| {
                vec![
                    s.app.as_str().into(),
                    s.kind.as_str().into(),
                    s.path.clone(),
                    s.confidence.as_str().into(),
                    s.suspicious.to_string(),
                ]
            })
            .collect(),
    )?;
    add(
        "whatsapp_messages",
        &["store_path", "rowid", "thread_key", "direction", "timestamp_utc", "timestamp_raw", "timestamp_unit", "text", "media_name"],
        wa.messages
            .iter()
            .map(|m| {
                vec![
                    m.store_path.clone(),
                    m.rowid.to_string(),
                    m.thread_key.clone(),
                    m.direction.as_str().into(),
                    m.timestamp.utc.clone(),
                    m.timestamp.raw.to_string(),
                    m.timestamp.unit.as_str().into(),
                    opt(&m.text),
                    opt(&m.media_name),
                ]
            })
            .collect(),
    )?;
    add(
        "whatsapp_threads",
        &["store_path", "rowid", "thread_key"],
        wa.threads.iter().map(|t| vec![t.store_path.clone(), t.rowid.to_string(), t.thread_key.clone()]).collect(),
    )?;
    let contact_rows = |cs: &[crate::model::Contact]| -> Vec<Vec<String>> {
        cs.iter()
            .map(|c| vec![c.store_path.clone(), c.rowid.to_string(), c.identifier.clone(), opt(&c.display_name), opt(&c.status)])
            .collect()
    };
    let contact_headers = ["store_path", "rowid", "identifier", "display_name", "status"];
    add("whatsapp_contacts", &contact_headers, contact_rows(&wa.contacts))?;
    add(
        "whatsapp_media_refs",
        &["store_path", "rowid", "media_name", "status", "resolved_paths"],
        wa.media_refs
            .iter()
            .map(|m| {
                vec![
                    m.message.store_path.clone(),
                    m.message.rowid.to_string(),
                    m.media_name.clone(),
                    match m.status {
                        RefStatus::Resolved => "resolved".into(),
                        RefStatus::Unresolved => "unresolved".into(),
                    },
                    m.resolved_paths.join(";"),
                ]
            })
            .collect(),
    )?;
    add(
        "encrypted_backups",
        &["path", "size_bytes", "sha256", "classification", "note"],
        wa.encrypted_backups
            .iter()
            .map(|b| vec![b.path.clone(), b.size_bytes.to_string(), b.sha256_hex.clone(), b.classification.clone(), opt(&b.note)])
            .collect(),
    )?;
    add(
        "viber_calls",
        &["store_path", "rowid", "remote_number", "direction", "direction_code", "start_time_utc", "start_time_raw", "duration_seconds", "also_recorded_in"],
        vb.calls
            .iter()
            .map(|c| {
                vec![
                    c.store_path.clone(),
                    c.rowid.to_string(),
                    c.remote_number.clone(),
                    c.direction.as_str().into(),
                    opt(&c.direction_code),
                    c.start_time.utc.clone(),
                    c.start_time.raw.to_string(),
                    c.duration_seconds.to_string(),
                    c.also_recorded_in.iter().map(|p| format!("{}#{}", p.store_path, p.rowid)).collect::<Vec<_>>().join(";"),
                ]
            })
            .collect(),
    )?;
    add(
        "viber_messages",
        &["store_path", "rowid", "thread_id", "remote_number", "direction", "timestamp_utc", "text"],
        vb.messages
            .iter()
            .map(|m| {
                vec![
                    m.store_path.clone(),
                    m.rowid.to_string(),
                    m.thread_id.to_string(),
                    opt(&m.remote_number),
                    m.direction.as_str().into(),
                    m.timestamp.utc.clone(),
                    opt(&m.text),
                ]
            })
            .collect(),
    )?;
    add("viber_contacts", &contact_headers, contact_rows(&vb.contacts))?;
    add("viber_numbers", &["number"], vb.viber_numbers.iter().map(|n| vec![n.clone()]).collect())?;
    add(
        "viber_summaries",
        &["remote_number", "total_calls", "total_call_seconds", "messages_sent", "messages_received"],
        vb.summaries
            .iter()
            .map(|s| {
                vec![
                    s.remote_number.clone(),
                    s.total_calls.to_string(),
                    s.total_call_seconds.to_string(),
                    s.messages_sent.to_string(),
                    s.messages_received.to_string(),
                ]
            })
            .collect(),
    )?;
    add(
        "timeline",
        &["timestamp_utc", "app", "kind", "store_path", "rowid", "direction", "counterpart"],
        r.timeline
            .iter()
            .map(|e| {
                vec![
                    e.timestamp_utc.clone(),
                    e.app.as_str().into(),
                    e.kind.as_str().into(),
                    e.store_path.clone(),
                    e.rowid.to_string(),
                    e.direction.clone(),
                    opt(&e.counterpart),
                ]
            })
            .collect(),
    )?;
    add(
        "warnings",
        &["store_path", "rowid", "code", "message"],
        r.warnings.iter().map(|w| vec![w.store_path.clone(), opt(&w.rowid), w.code.clone(), w.message.clone()]).collect(),
    )?;
    add(
        "assumptions",
        &["key", "store_path", "detail"],
        r.assumptions.iter().map(|a| vec![a.key.clone(), a.store_path.clone(), a.detail.clone()]).collect(),
    )?;
    add(
        "damage",
        &["store_path", "table", "rows_recovered", "last_good_rowid", "error"],
        r.damage
            .iter()
            .map(|d| vec![d.store_path.clone(), d.table.clone(), d.rows_recovered.to_string(), opt(&d.last_good_rowid), d.error.clone()])
            .collect(),
    )?;
    Ok(files)
}

fn text(r: &CaseReport) -> String {
    let mut s = String::new();
    let wa = &r.whatsapp;
    let vb = &r.viber;
    let _ = writeln!(s, "Case {}", r.case_id);
    let _ = writeln!(s, "Evidence tree digest (SHA-256): {}", r.manifest_digest);
    let _ = writeln!(s);
    let _ = writeln!(s, "Stores ({}):", r.stores.len());
    for st in &r.stores {
        let flag = if st.suspicious { "  [content is not SQLite]" } else { "" };
        let _ = writeln!(s, "  {:<8} {:<18} {}{flag}", st.app.as_str(), st.kind.as_str(), st.path);
    }
    for sc in &r.sidecars {
        let _ = writeln!(s, "  sidecar (not merged): {sc}");
    }
    let _ = writeln!(s);
    let resolved = wa.media_refs.iter().filter(|m| m.status == RefStatus::Resolved).count();
    let _ = writeln!(s, "WhatsApp");
    let _ = writeln!(s, "  messages: {}  threads: {}  contacts: {}", wa.messages.len(), wa.threads.len(), wa.contacts.len());
    let _ = writeln!(s, "  media references: {} ({resolved} resolved)", wa.media_refs.len());
    for b in &wa.encrypted_backups {
        let _ = writeln!(s, "  encrypted backup, not decrypted: {} ({} bytes)", b.path, b.size_bytes);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Viber");
    let _ = writeln!(s, "  calls: {}  messages: {}  contacts: {}", vb.calls.len(), vb.messages.len(), vb.contacts.len());
    if !vb.summaries.is_empty() {
        let _ = writeln!(s, "  {:<16} {:>6} {:>8} {:>6} {:>9}", "number", "calls", "seconds", "sent", "received");
        for p in &vb.summaries {
            let _ = writeln!(
                s,
                "  {:<16} {:>6} {:>8} {:>6} {:>9}",
                p.remote_number, p.total_calls, p.total_call_seconds, p.messages_sent, p.messages_received
            );
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Timeline ({} events)", r.timeline.len());
    for e in &r.timeline {
        let _ = writeln!(
            s,
            "  {}  {:<8} {:<7} {:<8} {}",
            e.timestamp_utc,
            e.app.as_str(),
            e.kind.as_str(),
            e.direction,
            e.counterpart.as_deref().unwrap_or("?")
        );
    }
    if !r.damage.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "Damaged tables ({}):", r.damage.len());
        for d in &r.damage {
            let _ = writeln!(s, "  {} {}: {} rows recovered; {}", d.store_path, d.table, d.rows_recovered, d.error);
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Warnings: {}  Assumptions applied: {}", r.warnings.len(), r.assumptions.len());
    s
}
