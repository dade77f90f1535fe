//! The aggregate verification report: JSON and a plain table.

use std::fmt::Write;

use lifting_core::verify::{Bound, CorpusReport, Counterexample, Instance, LemmaReport, SimSummary, Verdict};
use serde::{Deserialize, Serialize};

use crate::formats::{show, Rat};
use crate::trace::mode_name;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum BoundFile {
    AtMost { value: Rat },
    Below { value: Rat },
    /// `measured <= 2^-exponent`.
    AtMostPow2 { exponent: Rat },
    BelowPow2 { exponent: Rat },
}

impl From<&Bound> for BoundFile {
    fn from(b: &Bound) -> Self {
        match b {
            Bound::AtMost(v) => BoundFile::AtMost { value: Rat::from(v) },
            Bound::Below(v) => BoundFile::Below { value: Rat::from(v) },
            Bound::AtMostPow2(q) => BoundFile::AtMostPow2 { exponent: Rat::from(q) },
            Bound::BelowPow2(q) => BoundFile::BelowPow2 { exponent: Rat::from(q) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub id: String,
    pub verdict: String,
    pub hypothesis: bool,
    pub measured: Option<Rat>,
    pub bound: Option<BoundFile>,
    pub conclusion: bool,
    pub note: String,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Vacuous => "vacuous",
        Verdict::Fail => "FAIL",
    }
}

impl From<&Instance> for InstanceFile {
    fn from(i: &Instance) -> Self {
        InstanceFile {
            id: i.id.clone(),
            verdict: verdict_name(i.verdict()).to_string(),
            hypothesis: i.hypothesis,
            measured: i.measured.as_ref().map(Rat::from),
            bound: i.bound.as_ref().map(BoundFile::from),
            conclusion: i.conclusion,
            note: i.note.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleFile {
    pub instance: InstanceFile,
    pub input: String,
    pub reverified: bool,
}

impl From<&Counterexample> for CounterexampleFile {
    fn from(c: &Counterexample) -> Self {
        CounterexampleFile { instance: InstanceFile::from(&c.instance), input: c.input.clone(), reverified: c.reverified }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaFile {
    pub lemma: String,
    pub passes: u64,
    pub vacuous: u64,
    pub fails: u64,
    pub vacuity_rate: Option<Rat>,
    pub all_vacuous: bool,
    pub counterexamples: Vec<CounterexampleFile>,
    pub archived: Vec<InstanceFile>,
}

fn vacuity_rate(l: &LemmaReport) -> Option<Rat> {
    (l.total() > 0).then(|| Rat(lifting_core::rational::ratio(l.vacuous as i64, l.total() as i64)))
}

impl From<&LemmaReport> for LemmaFile {
    fn from(l: &LemmaReport) -> Self {
        LemmaFile {
            lemma: l.lemma.clone(),
            passes: l.passes,
            vacuous: l.vacuous,
            fails: l.fails,
            vacuity_rate: vacuity_rate(l),
            all_vacuous: l.all_vacuous(),
            counterexamples: l.counterexamples.iter().map(CounterexampleFile::from).collect(),
            archived: l.archived.iter().map(InstanceFile::from).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub id: String,
    pub mode: String,
    pub status: String,
    pub queries: u32,
    pub depth: usize,
    pub rounds_bound: u32,
    pub communication: u32,
    pub certified: Option<bool>,
    pub k_halt: Option<Rat>,
    pub truncation_halt: Option<Rat>,
    pub violation: Option<Rat>,
    pub tv_to_reference: Option<Rat>,
    pub ledger_mismatches: usize,
    pub ledger_flagged: usize,
}

impl From<&SimSummary> for SimulationFile {
    fn from(s: &SimSummary) -> Self {
        SimulationFile {
            id: s.id.clone(),
            mode: mode_name(s.mode).to_string(),
            status: s.status.clone(),
            queries: s.queries,
            depth: s.depth,
            rounds_bound: s.rounds_bound,
            communication: s.comm,
            certified: s.certified,
            k_halt: s.k_halt.as_ref().map(Rat::from),
            truncation_halt: s.truncation_halt.as_ref().map(Rat::from),
            violation: s.violation.as_ref().map(Rat::from),
            tv_to_reference: s.tv.as_ref().map(Rat::from),
            ledger_mismatches: s.ledger_mismatches,
            ledger_flagged: s.ledger_flagged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFile {
    pub seed: u64,
    pub success: bool,
    pub counterexamples: usize,
    /// Lemmas none of whose instances met the hypothesis.
    pub all_vacuous: Vec<String>,
    pub lemmas: Vec<LemmaFile>,
    pub simulations: Vec<SimulationFile>,
    pub refusals: Vec<String>,
}

impl From<&CorpusReport> for ReportFile {
    fn from(r: &CorpusReport) -> Self {
        ReportFile {
            seed: r.seed,
            success: r.success(),
            counterexamples: r.counterexamples(),
            all_vacuous: r.all_vacuous().into_iter().map(String::from).collect(),
            lemmas: r.lemmas.iter().map(LemmaFile::from).collect(),
            simulations: r.simulations.iter().map(SimulationFile::from).collect(),
            refusals: r.refusals.clone(),
        }
    }
}

fn opt(r: &Option<lifting_core::Rational>) -> String {
    r.as_ref().map_or_else(|| String::from("-"), lifting_core::rational::format_rational)
}

/// The human-readable summary printed by `verify`.
pub fn render_table(r: &CorpusReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed {}", r.seed);
    if !r.lemmas.is_empty() {
        let _ = writeln!(s, "{:<30} {:>9} {:>9} {:>6}  note", "lemma", "pass", "vacuous", "fail");
    }
    for l in &r.lemmas {
        let mut note = Vec::new();
        if l.all_vacuous() {
            note.push(String::from("ALL VACUOUS"));
        }
        if let Some(v) = vacuity_rate(l) {
            if l.vacuous > 0 && !l.all_vacuous() {
                note.push(format!("vacuity {}", show(&v.0)));
            }
        }
        if !l.counterexamples.is_empty() {
            let re = l.counterexamples.iter().filter(|c| c.reverified).count();
            note.push(format!("{} counterexamples, {re} reverified", l.counterexamples.len()));
        }
        let _ = writeln!(s, "{:<30} {:>9} {:>9} {:>6}  {}", l.lemma, l.passes, l.vacuous, l.fails, note.join("; "));
    }
    if !r.simulations.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<24} {:>4} {:>7} {:>5} {:>6} {:>4} {:>9} {:>10} {:>8}  status",
            "run", "mode", "queries", "depth", "rounds", "C", "certified", "k-halt", "ledger"
        );
        for m in &r.simulations {
            let cert = m.certified.map_or("-", |c| if c { "yes" } else { "no" });
            let _ = writeln!(
                s,
                "{:<24} {:>4} {:>7} {:>5} {:>6} {:>4} {:>9} {:>10} {:>8}  {}",
                m.id,
                mode_name(m.mode),
                m.queries,
                m.depth,
                m.rounds_bound,
                m.comm,
                cert,
                opt(&m.k_halt),
                format!("{}/{}", m.ledger_mismatches, m.ledger_flagged),
                m.status
            );
        }
    }
    for f in &r.refusals {
        let _ = writeln!(s, "refused: {f}");
    }
    for l in &r.lemmas {
        for c in &l.counterexamples {
            let i = &c.instance;
            let measured = i.measured.as_ref().map_or_else(String::new, |m| format!(" measured {}", show(m)));
            let bound = i.bound.as_ref().map_or_else(String::new, |b| format!(" bound {}", b.render()));
            let _ = writeln!(
                s,
                "counterexample {} {}:{measured}{bound}{} [{}] input: {}",
                l.lemma,
                i.id,
                if i.note.is_empty() { String::new() } else { format!(" ({})", i.note) },
                if c.reverified { "reverified" } else { "NOT reverified" },
                c.input
            );
        }
    }
    let _ = writeln!(s, "counterexamples: {}", r.counterexamples());
    let flagged = r.all_vacuous();
    if !flagged.is_empty() {
        let _ = writeln!(s, "all-vacuous lemmas: {}", flagged.join(", "));
    }
    let _ = writeln!(s, "result: {}", if r.success() { "ok" } else { "FAIL" });
    s
}
