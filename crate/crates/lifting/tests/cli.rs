use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lifting::formats::{from_json, parse_gadget, parse_tree, to_json, TreeFile};
use lifting::report::ReportFile;
use lifting::trace::TraceFile;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn lifting(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifting")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn gadget_analyze_builtins() {
    let o = lifting(&["gadget", "analyze", "xor1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("disc(g) = 1/4 (approx 0.25)"), "{}", stdout(&o));
    let o = lifting(&["gadget", "analyze", "--gadget", "and1", "--m", "1,2,3"]);
    assert!(stdout(&o).contains("disc(g) = 1/2"));
    assert_eq!(stdout(&o).matches("holds").count(), 3);
}

#[test]
fn gadget_files_round_trip_and_bad_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ip2.json");
    let o = lifting(&["gadget", "analyze", "ip2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let g = parse_gadget(&text).unwrap();
    assert_eq!(to_json(&lifting::formats::GadgetFile::from_gadget(&g)), text);
    let again = lifting(&["gadget", "analyze", out.to_str().unwrap()]);
    assert!(stdout(&again).contains("disc(g) = 5/16"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"b": 1, "rows": ["01", "10", "11"]}"#).unwrap();
    let o = lifting(&["gadget", "analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("at rows: expected 2 rows, got 3"), "{}", stderr(&o));
}

#[test]
fn lift_demo_completes_and_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let demo = data("protocols/demo.json");
    let o = lifting(&["lift", "--protocol", demo.to_str().unwrap(), "--gadget", "ip2", "--z", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("status: done"), "{s}");
    assert!(s.contains("certified: yes"), "{s}");
    assert!(s.contains("output: 1"), "{s}");
    let text = std::fs::read_to_string(&out).unwrap();
    let trace: TraceFile = from_json(&text).unwrap();
    assert_eq!(to_json(&trace), text);
    let run = trace.run.unwrap();
    assert_eq!(run.ledger.mismatches, 0);
    assert!(run.rounds.iter().all(|r| r.deficiency_before.is_some()));
}

#[test]
fn lift_enumeration_reports_error_mass_and_distance() {
    let demo = data("protocols/demo.json");
    let o = lifting(&["lift", "--protocol", demo.to_str().unwrap(), "--gadget", "ip2", "--z", "01", "--mode", "rand", "--enumerate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("error-halt mass: 0"), "{s}");
    assert!(s.contains("TV to reference: "), "{s}");
}

#[test]
fn silent_protocol_makes_no_queries() {
    let p = data("protocols/silent.json");
    let o = lifting(&["lift", "--protocol", p.to_str().unwrap(), "--gadget", "ip2", "--z", "11"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("queries: 0 in 0 rounds"), "{}", stdout(&o));
}

#[test]
fn lift_rejects_mismatched_dimensions() {
    let demo = data("protocols/demo.json");
    let o = lifting(&["lift", "--protocol", demo.to_str().unwrap(), "--gadget", "xor1", "--z", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dimension mismatch"));
    let o = lifting(&["lift", "--protocol", demo.to_str().unwrap(), "--gadget", "ip2", "--z", "101"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sampled_runs_are_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let demo = data("protocols/demo.json");
    let mut outs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("t{k}.json"));
        let o = lifting(&[
            "lift",
            "--protocol",
            demo.to_str().unwrap(),
            "--gadget",
            "ip2",
            "--z",
            "11",
            "--mode",
            "rand",
            "--seed",
            "42",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        outs.push((o.stdout, std::fs::read(&out).unwrap()));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = lifting(&["verify", data("corpus/empty.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r: ReportFile = from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.lemmas.is_empty() && r.success);

    let o = lifting(&["verify", data("corpus/planted.json").to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(&out).unwrap();
    let r: ReportFile = from_json(&text).unwrap();
    assert_eq!(to_json(&r), text);
    assert_eq!(r.counterexamples, 1);
    assert!(r.lemmas[0].counterexamples[0].reverified);
    assert!(stdout(&o).contains("[reverified]"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"kraft": {"max_depth": 2}}"#).unwrap();
    let o = lifting(&["verify", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn oracle_values_trees_and_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tree.json");
    let o = lifting(&["oracle", "dt", "--problem", "parity3", "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).contains("D^dt(parity3) = 3"));
    let text = std::fs::read_to_string(&out).unwrap();
    let t = parse_tree(&text).unwrap();
    assert_eq!(to_json(&TreeFile::from_tree(&t)), text);

    let o = lifting(&["oracle", "dt", "--problem", "const3"]);
    assert!(stdout(&o).contains("= 0"));

    let o = lifting(&["oracle", "dt", "--problem", "parity10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("refused"), "{}", stderr(&o));

    let p = data("problems/majority3.json");
    let o = lifting(&["oracle", "dt", "--problem", p.to_str().unwrap(), "--gadget", "ip1"]);
    assert!(stdout(&o).contains("D^dt(majority3) = 3"), "{}", stdout(&o));
    assert!(stdout(&o).contains("C = 6 <= D^dt*(b+1) = 6"), "{}", stdout(&o));
}

#[test]
fn budgets_must_be_positive() {
    let o = lifting(&["oracle", "dt", "--problem", "parity2", "--budget-dt-n", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lifting(&["gadget", "analyze", "ip2", "--budget-side", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}
