//! One PASS/FAIL line per acceptance criterion, over the shipped default corpus.
//!
//! Criterion 7 fails on this corpus: single-coordinate leaking values are
//! dangerous but can never be biasing when n < 4, so the claim chain has
//! genuine counterexamples (each one reverified). The target exits non-zero
//! only if the set of failing criteria differs from that.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use lifting::formats::{read_text, show, to_json};
use lifting::report::{render_table, ReportFile};
use lifting::spec::parse_spec;
use lifting_core::rational::ratio;
use lifting_core::simulate::Mode;
use lifting_core::verify::{merge, plan, run_task, CorpusReport, LemmaReport, Task};

const KNOWN_FAILURES: [u32; 1] = [7];

fn family(t: Task) -> &'static str {
    match t {
        Task::Fourier => "fourier",
        Task::Xor(_) => "xor",
        Task::Simulation(_) => "simulation",
        _ => "other",
    }
}

struct Check {
    failing: Vec<u32>,
}

impl Check {
    fn line(&mut self, n: u32, ok: bool, what: &str, detail: String) {
        println!("criterion {n:>2} {} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failing.push(n);
        }
    }
}

fn lemma<'a>(r: &'a CorpusReport, id: &str) -> &'a LemmaReport {
    r.lemma(id).unwrap_or_else(|| panic!("lemma {id} missing from the report"))
}

fn counts(l: &LemmaReport) -> String {
    format!("{} {}/{}/{} pass/vacuous/fail", l.lemma, l.passes, l.vacuous, l.fails)
}

fn vacuity(l: &LemmaReport) -> String {
    if l.total() == 0 {
        return String::from("no instances");
    }
    show(&ratio(l.vacuous as i64, l.total() as i64))
}

fn main() -> ExitCode {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/corpus/default.json");
    let spec = parse_spec(&read_text(&path).expect("default corpus"), path.parent().unwrap()).expect("default corpus parses");

    let mut seconds: BTreeMap<&str, f64> = BTreeMap::new();
    let mut outputs = Vec::new();
    for t in plan(&spec) {
        let start = Instant::now();
        outputs.push(run_task(&spec, t));
        *seconds.entry(family(t)).or_default() += start.elapsed().as_secs_f64();
    }
    let r = merge(spec.seed, outputs);
    let secs = |f: &str| seconds.get(f).copied().unwrap_or(0.0);
    let mut c = Check { failing: Vec::new() };

    let f = lemma(&r, "fourier-bias-identity");
    c.line(1, f.fails == 0 && f.total() >= 1000 && secs("fourier") < 30.0, "Fourier-bias identity", format!("{}, {:.2} s", counts(f), secs("fourier")));

    let v = lemma(&r, "vazirani");
    let vm = lemma(&r, "vazirani-min-entropy");
    c.line(
        2,
        v.fails == 0 && vm.fails == 0 && v.total() >= 1000 && vm.total() >= 1000,
        "Vazirani checkers",
        format!("{} (vacuity {}); {} (vacuity {})", counts(v), vacuity(v), counts(vm), vacuity(vm)),
    );

    let x = lemma(&r, "xor-lemma");
    c.line(
        3,
        x.fails == 0 && x.passes == 13 && x.archived.len() == 13 && secs("xor") < 120.0,
        "XOR-lemma sandwich",
        format!("{}, {} archived, {:.2} s", counts(x), x.archived.len(), secs("xor")),
    );

    let ext: Vec<&LemmaReport> = ["extractor", "sampling", "xor-extractor", "xor-sampling"].iter().map(|id| lemma(&r, id)).collect();
    let flagged: Vec<&str> = ext.iter().filter(|l| l.all_vacuous()).map(|l| l.lemma.as_str()).collect();
    c.line(
        4,
        ext.iter().all(|l| l.fails == 0),
        "extractor and sampling lemmas",
        format!(
            "{}; all-vacuous: {}",
            ext.iter().map(|l| counts(l)).collect::<Vec<_>>().join("; "),
            if flagged.is_empty() { String::from("none") } else { flagged.join(", ") }
        ),
    );

    let k = lemma(&r, "kraft");
    let kr = lemma(&r, "kraft-rational");
    c.line(5, k.fails == 0 && kr.fails == 0 && k.passes > 0, "Kraft heavy message", format!("{}; {}", counts(k), counts(kr)));

    let dfix = lemma(&r, "density-restoring-fix");
    let dpart = lemma(&r, "density-restoring-partition");
    c.line(
        6,
        dfix.fails == 0 && dpart.fails == 0 && dfix.total() >= 200 && dpart.total() >= 200,
        "density-restoring machinery",
        format!("{}; {}", counts(dfix), counts(dpart)),
    );

    let sk = lemma(&r, "claim-skewing");
    let bi = lemma(&r, "claim-biasing");
    let reverified = bi.counterexamples.iter().filter(|c| c.reverified).count();
    c.line(
        7,
        sk.fails == 0 && bi.fails == 0 && sk.vacuous == 0 && bi.vacuous == 0,
        "claim chain",
        format!("{}; {} ({reverified} counterexamples reverified)", counts(sk), counts(bi)),
    );

    let cert = lemma(&r, "det-certification");
    let depth = lemma(&r, "det-depth");
    let det: Vec<_> = r.simulations.iter().filter(|s| s.mode == Mode::Deterministic).collect();
    let done_certified = det.iter().filter(|s| s.status == "done").all(|s| s.certified == Some(true));
    let violations = det.iter().filter(|s| s.status.starts_with("violation")).count();
    let sim_refusals = r.refusals.iter().filter(|s| s.starts_with("det ") || s.starts_with("rand ") || s.starts_with("simulation ")).count();
    c.line(
        8,
        cert.fails == 0 && depth.fails == 0 && det.len() == 20 && done_certified && sim_refusals == 0 && secs("simulation") < 300.0,
        "deterministic end-to-end",
        format!(
            "{} runs, {violations} violations with named hypotheses, {}; {}, {:.2} s",
            det.len(),
            counts(cert),
            counts(depth),
            secs("simulation")
        ),
    );

    let eh = lemma(&r, "error-halt");
    let worst = r.simulations.iter().filter_map(|s| s.k_halt.clone()).max();
    c.line(
        9,
        eh.fails == 0 && eh.passes == 20,
        "randomized error-halt bound",
        format!("{}, largest K-halt mass {}", counts(eh), worst.as_ref().map_or_else(|| String::from("-"), show)),
    );

    let led = lemma(&r, "ledger");
    let mismatches: usize = r.simulations.iter().map(|s| s.ledger_mismatches).sum();
    let flagged: usize = r.simulations.iter().map(|s| s.ledger_flagged).sum();
    c.line(
        10,
        led.fails == 0 && mismatches == 0,
        "deficiency ledger",
        format!("{}, {mismatches} mismatches, {flagged} clauses with unmet preconditions", counts(led)),
    );

    let or = lemma(&r, "oracle");
    let cc = lemma(&r, "canonical-cost");
    c.line(11, or.fails == 0 && or.passes == 3 && cc.fails == 0 && cc.passes == 5, "oracle sanity", format!("{}; {}", counts(or), counts(cc)));

    let dir = tempfile::tempdir().expect("temp dir");
    let out = dir.path().join("report.json");
    let cli = Command::new(env!("CARGO_BIN_EXE_lifting"))
        .args(["verify", path.to_str().unwrap(), "--jobs", "4", "--out", out.to_str().unwrap()])
        .output()
        .expect("binary runs");
    let in_process = to_json(&ReportFile::from(&r));
    let from_cli = std::fs::read_to_string(&out).unwrap_or_default();
    let same_json = in_process == from_cli;
    let same_table = String::from_utf8_lossy(&cli.stdout) == render_table(&r);
    let exit_ok = cli.status.code() == Some(if r.success() { 0 } else { 1 });
    c.line(
        12,
        same_json && same_table && exit_ok,
        "determinism",
        format!(
            "sequential vs 4-thread CLI run: report {}, table {}, {} bytes, exit {:?}",
            if same_json { "identical" } else { "DIFFERS" },
            if same_table { "identical" } else { "DIFFERS" },
            in_process.len(),
            cli.status.code()
        ),
    );

    println!("failing criteria: {:?} (expected {:?})", c.failing, KNOWN_FAILURES);
    if c.failing == KNOWN_FAILURES {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
