//! Rebuild the golden tree (tar) and expected report from a scenario file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use imtriage_fixtures::{generate_scenario, golden_dir, materialize, write_tar, Scenario};

#[derive(Parser)]
#[command(about = "Regenerate golden fixture files")]
struct Args {
    /// Scenario file.
    #[arg(long, default_value_os_t = golden_dir().join("golden.toml"))]
    scenario: PathBuf,
    /// Output directory for golden.tar and expected_report.json.
    #[arg(long, default_value_os_t = golden_dir())]
    out: PathBuf,
}

fn run(args: Args) -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::load(&args.scenario)?;
    let generated = generate_scenario(&scenario)?;
    let work = tempfile::tempdir()?;
    let tree = work.path().join("tree");
    let done = materialize(&generated, &tree)?;
    std::fs::create_dir_all(&args.out)?;
    write_tar(&tree, &args.out.join("golden.tar"))?;
    std::fs::write(args.out.join("expected_report.json"), &done.expected_json)?;
    eprintln!("tree digest {}", done.manifest_digest);
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regen-golden: {e}");
            ExitCode::FAILURE
        }
    }
}
