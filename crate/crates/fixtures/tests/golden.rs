use std::fs;

use imtriage_core::audit::NoAudit;
use imtriage_core::ingest::ExtractionTree;
use imtriage_core::pipeline::{run_parse, ParseOptions};
use imtriage_core::report::{emit_report, Format};
use imtriage_core::model::Direction;
use imtriage_fixtures::generate::Content;
use imtriage_fixtures::{
    engine_available, generate_scenario, golden_dir, materialize, write_tar, Scenario, ScenarioError,
};

fn golden() -> Scenario {
    Scenario::load(&golden_dir().join("golden.toml")).unwrap()
}

fn parse_json(path: &std::path::Path, case_id: &str) -> Vec<u8> {
    let tree = ExtractionTree::open(path).unwrap();
    let opts = ParseOptions {
        case_id: case_id.into(),
        ..ParseOptions::default()
    };
    let out = run_parse(&tree, &opts, &NoAudit).unwrap();
    assert!(out.evidence_errors.is_empty(), "{:?}", out.evidence_errors);
    emit_report(&out.report, Format::Json).unwrap().files.remove(0).1
}

fn show_diff(a: &[u8], b: &[u8]) -> String {
    let (a, b) = (String::from_utf8_lossy(a), String::from_utf8_lossy(b));
    for (i, (x, y)) in a.lines().zip(b.lines()).enumerate() {
        if x != y {
            return format!("line {}: parsed {x:?} expected {y:?}", i + 1);
        }
    }
    format!("lengths {} vs {}", a.len(), b.len())
}

#[test]
fn committed_golden_tree_parses_to_committed_report() {
    let dir = golden_dir();
    let expected = fs::read(dir.join("expected_report.json")).unwrap();
    let got = parse_json(&dir.join("golden.tar"), "golden");
    assert!(got == expected, "{}", show_diff(&got, &expected));
}

#[test]
fn materialized_tree_parses_to_expected_report() {
    if !engine_available() {
        eprintln!("engine unavailable; covered by the committed golden tree");
        return;
    }
    let generated = generate_scenario(&golden()).unwrap();
    let work = tempfile::tempdir().unwrap();
    let done = materialize(&generated, &work.path().join("tree")).unwrap();
    let got = parse_json(&done.root, "golden");
    assert!(got == done.expected_json, "{}", show_diff(&got, &done.expected_json));
}

#[test]
fn regeneration_matches_committed_files() {
    if !engine_available() {
        return;
    }
    let dir = golden_dir();
    let generated = generate_scenario(&golden()).unwrap();
    let work = tempfile::tempdir().unwrap();
    let done = materialize(&generated, &work.path().join("tree")).unwrap();
    let tar = work.path().join("golden.tar");
    write_tar(&done.root, &tar).unwrap();
    assert!(fs::read(&tar).unwrap() == fs::read(dir.join("golden.tar")).unwrap(), "golden.tar is stale; run regen-golden");
    assert!(done.expected_json == fs::read(dir.join("expected_report.json")).unwrap(), "expected_report.json is stale");
}

#[test]
fn same_seed_same_output() {
    let a = generate_scenario(&golden()).unwrap();
    let b = generate_scenario(&golden()).unwrap();
    assert_eq!(a.scripts, b.scripts);
    assert_eq!(a.layout, b.layout);
    assert_eq!(
        emit_report(&a.expected, Format::Json).unwrap().files,
        emit_report(&b.expected, Format::Json).unwrap().files
    );
    let mut other = golden();
    other.seed += 1;
    assert_ne!(generate_scenario(&other).unwrap().scripts, a.scripts);
}

#[test]
fn one_outgoing_text_gives_one_outgoing_message() {
    let s = Scenario::parse(
        r#"
        seed = 1
        start_utc = "2013-01-01T00:00:00Z"
        end_utc = "2013-01-01T01:00:00Z"
        [[actors]]
        name = "Alex Example"
        number = "+12025550101"
        whatsapp = true
        [whatsapp]
        chats_sent = 1
        "#,
    )
    .unwrap();
    let g = generate_scenario(&s).unwrap();
    let msgs = &g.expected.whatsapp.messages;
    assert_eq!(msgs.len(), 1);
    assert_eq!(msgs[0].direction, Direction::Outgoing);
}

#[test]
fn all_whatsapp_activity_classes_carry_media_names() {
    let g = generate_scenario(&golden()).unwrap();
    let names: Vec<&str> = g.truth.whatsapp.iter().filter_map(|m| m.media_name.as_deref()).collect();
    for prefix in ["IMG-", "VID-", "AUD-"] {
        assert!(names.iter().any(|n| n.starts_with(prefix)), "{prefix}");
    }
    // shared contacts carry the contact's display name
    assert!(names.iter().any(|n| n.contains(' ')));
    let media_files = g
        .layout
        .iter()
        .filter(|e| e.path.contains("/WhatsApp/Media/") && matches!(e.content, Content::Bytes(_)))
        .count();
    assert!(media_files >= 8);
}

#[test]
fn timestamps_stay_in_range() {
    let s = golden();
    let (start, end) = s.range().unwrap();
    let g = generate_scenario(&s).unwrap();
    for t in &g.expected.timeline {
        assert!(t.epoch_millis >= start * 1000 && t.epoch_millis < (end + 1) * 1000, "{t:?}");
    }
}

#[test]
fn rejects_bad_scenarios() {
    let base = r#"
        seed = 1
        start_utc = "2013-01-01T00:00:00Z"
        end_utc = "2013-01-01T01:00:00Z"
    "#;
    let real_number = format!("{base}[[actors]]\nname = \"A\"\nnumber = \"+12025551234\"\n");
    assert!(matches!(Scenario::parse(&real_number), Err(ScenarioError::InvalidScenario(_))));
    let negative = format!("{base}[whatsapp]\nchats_sent = -1\n");
    assert!(matches!(Scenario::parse(&negative), Err(ScenarioError::InvalidScenario(_))));
    let no_actor = format!("{base}[viber]\ntexts_sent = 1\n");
    assert!(matches!(Scenario::parse(&no_actor), Err(ScenarioError::InvalidScenario(_))));
    let reversed = base.replace("01:00:00Z", "00:00:00Z");
    assert!(matches!(Scenario::parse(&reversed), Err(ScenarioError::InvalidScenario(_))));
    let crowded = format!(
        "{}[[actors]]\nname = \"A\"\nnumber = \"+12025550101\"\nwhatsapp = true\n[whatsapp]\nchats_sent = 5\n",
        base.replace("01:00:00Z", "00:00:02Z")
    );
    let s = Scenario::parse(&crowded).unwrap();
    assert!(matches!(generate_scenario(&s), Err(ScenarioError::InvalidScenario(_))));
}
