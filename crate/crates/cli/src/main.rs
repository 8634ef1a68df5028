//! `imtriage`: read-only triage of WhatsApp and Viber evidence in Android
//! filesystem extractions (a directory or a tar archive).
//!
//! Exit codes: 0 success, 1 evidence errors (damaged or unreadable stores;
//! the report is still written), 2 usage errors, 3 integrity failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imtriage_core::audit::NoAudit;
use imtriage_core::ingest::{ExtractionTree, IngestError};
use imtriage_core::integrity::{build_manifest, verify_manifest, EntryStatus, EvidenceManifest, IntegrityError};
use imtriage_core::locator::scan_stores;
use imtriage_core::pipeline::{run_parse, ParseOptions, PipelineError, DEFAULT_CASE_ID};
use imtriage_core::report::{emit_report, CaseReport, Emitted, Format};
use imtriage_core::schema_map::SchemaMap;

const EVIDENCE: u8 = 1;
const USAGE: u8 = 2;
const INTEGRITY: u8 = 3;

#[derive(Parser)]
#[command(name = "imtriage", version, about = "WhatsApp and Viber triage for Android filesystem extractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the artifact stores found in an extraction.
    Scan {
        root: PathBuf,
    },
    /// Hash every file and write an evidence manifest.
    Hash {
        root: PathBuf,
        /// Manifest file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check an extraction against a manifest. Exit 3 on any difference.
    Verify {
        root: PathBuf,
        #[arg(short, long)]
        manifest: PathBuf,
    },
    /// Run the full pipeline and write the case report.
    Parse {
        root: PathBuf,
        /// Column and table name overrides, `key = candidate, ...` per line.
        #[arg(long)]
        schema_map: Option<PathBuf>,
        /// json, csv or text.
        #[arg(long, default_value = "json")]
        format: String,
        /// Output file (json, text) or directory (csv); standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep every decoded cell of each message and call row.
        #[arg(long)]
        include_raw: bool,
        #[arg(long, default_value = DEFAULT_CASE_ID)]
        case_id: String,
    },
    /// Re-render a JSON report in another format.
    Report {
        report: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl ToString) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

/// Missing roots and unknown containers are the caller's mistake; read
/// failures inside the evidence are not.
fn ingest_failure(e: IngestError) -> Failure {
    match e {
        IngestError::NotFound(_) | IngestError::UnsupportedContainer(_) => fail(USAGE, e),
        other => fail(EVIDENCE, other),
    }
}

fn open(root: &Path) -> Result<ExtractionTree, Failure> {
    let tree = ExtractionTree::open(root).map_err(ingest_failure)?;
    for a in tree.anomalies() {
        eprintln!("warning: {a}");
    }
    Ok(tree)
}

fn format_arg(s: &str) -> Result<Format, Failure> {
    s.parse().map_err(|e| fail(USAGE, e))
}

fn write_out(emitted: Emitted, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let io_fail = |p: &Path, e: io::Error| fail(USAGE, format!("{}: {e}", p.display()));
    match (format, out) {
        (Format::Csv, None) => Err(fail(USAGE, "csv output needs --out <directory>")),
        (Format::Csv, Some(dir)) => {
            fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
            for (name, bytes) in emitted.files {
                let p = dir.join(name);
                fs::write(&p, bytes).map_err(|e| io_fail(&p, e))?;
            }
            Ok(())
        }
        (_, Some(file)) => {
            let bytes = emitted.files.into_iter().next().map(|f| f.1).unwrap_or_default();
            fs::write(file, bytes).map_err(|e| io_fail(file, e))
        }
        (_, None) => {
            let mut stdout = io::stdout().lock();
            for (_, bytes) in emitted.files {
                stdout.write_all(&bytes).map_err(|e| fail(EVIDENCE, e))?;
            }
            stdout.flush().map_err(|e| fail(EVIDENCE, e))
        }
    }
}

fn scan(root: &Path) -> Result<(), Failure> {
    let tree = open(root)?;
    let stores = scan_stores(&tree, &NoAudit).map_err(ingest_failure)?;
    let mut stdout = io::stdout().lock();
    for s in &stores {
        let flag = if s.suspicious { "\tsuspicious" } else { "" };
        writeln!(stdout, "{}\t{}\t{}\t{}{flag}", s.app.as_str(), s.kind.as_str(), s.confidence.as_str(), s.path)
            .map_err(|e| fail(EVIDENCE, e))?;
    }
    eprintln!("{} stores", stores.len());
    Ok(())
}

fn hash(root: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let tree = open(root)?;
    let manifest = build_manifest(&tree, &NoAudit).map_err(ingest_failure)?;
    let text = manifest.to_text();
    match output {
        Some(p) => fs::write(p, text).map_err(|e| fail(USAGE, format!("{}: {e}", p.display())))?,
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(|e| fail(EVIDENCE, e))?,
    }
    eprintln!("{} files, tree digest {}", manifest.entries.len(), manifest.tree_digest);
    Ok(())
}

fn verify(root: &Path, manifest: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(manifest).map_err(|e| fail(USAGE, format!("{}: {e}", manifest.display())))?;
    let manifest = EvidenceManifest::parse(&text).map_err(|e| fail(USAGE, e))?;
    let tree = open(root)?;
    let result = verify_manifest(&tree, &manifest, &NoAudit).map_err(|e| match e {
        IntegrityError::Ingest(e) => ingest_failure(e),
        other => fail(USAGE, other),
    })?;
    let mut stdout = io::stdout().lock();
    for c in result.failures() {
        let line = match &c.status {
            EntryStatus::Mismatch {
                expected_sha256,
                actual_sha256,
                expected_size,
                actual_size,
            } => format!(
                "MISMATCH\t{}\texpected {expected_size} {expected_sha256}\tactual {actual_size} {actual_sha256}",
                c.path
            ),
            EntryStatus::Missing => format!("MISSING\t{}", c.path),
            EntryStatus::Extra => format!("EXTRA\t{}", c.path),
            EntryStatus::Match => continue,
        };
        writeln!(stdout, "{line}").map_err(|e| fail(EVIDENCE, e))?;
    }
    if result.passed {
        eprintln!("verified {} files", result.checks.len());
        Ok(())
    } else {
        Err(fail(INTEGRITY, format!("{} entries differ from the manifest", result.failures().count())))
    }
}

fn parse(
    root: &Path,
    schema_map: Option<&Path>,
    format: &str,
    out: Option<&Path>,
    include_raw: bool,
    case_id: String,
) -> Result<(), Failure> {
    let format = format_arg(format)?;
    let schema_map = match schema_map {
        Some(p) => SchemaMap::load(p).map_err(|e| fail(USAGE, e))?,
        None => SchemaMap::default(),
    };
    let tree = open(root)?;
    let opts = ParseOptions {
        case_id,
        include_raw,
        schema_map,
    };
    let outcome = run_parse(&tree, &opts, &NoAudit).map_err(|e| match e {
        PipelineError::Ingest(e) => ingest_failure(e),
    })?;
    let emitted = emit_report(&outcome.report, format).map_err(|e| fail(EVIDENCE, e))?;
    write_out(emitted, format, out)?;
    let r = &outcome.report;
    eprintln!(
        "{} stores, {} WhatsApp messages, {} Viber calls, {} Viber messages, {} warnings",
        r.stores.len(),
        r.whatsapp.messages.len(),
        r.viber.calls.len(),
        r.viber.messages.len(),
        r.warnings.len()
    );
    if outcome.evidence_errors.is_empty() {
        return Ok(());
    }
    for e in &outcome.evidence_errors {
        eprintln!("evidence error: {e}");
    }
    Err(fail(EVIDENCE, format!("{} evidence errors; report written with what was recoverable", outcome.evidence_errors.len())))
}

fn report(path: &Path, format: &str, out: Option<&Path>) -> Result<(), Failure> {
    let format = format_arg(format)?;
    let bytes = fs::read(path).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))?;
    let report = CaseReport::from_json(&bytes).map_err(|e| fail(USAGE, e))?;
    let emitted = emit_report(&report, format).map_err(|e| fail(USAGE, e))?;
    write_out(emitted, format, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scan { root } => scan(&root),
        Command::Hash { root, output } => hash(&root, output.as_deref()),
        Command::Verify { root, manifest } => verify(&root, &manifest),
        Command::Parse {
            root,
            schema_map,
            format,
            out,
            include_raw,
            case_id,
        } => parse(&root, schema_map.as_deref(), &format, out.as_deref(), include_raw, case_id),
        Command::Report { report: path, format, out } => report(&path, &format, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("imtriage: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
