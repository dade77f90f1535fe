//! The trace file written by `lift`: one record per simulated round.

use lifting_core::protocol::Party;
use lifting_core::simulate::ledger::LedgerReport;
use lifting_core::simulate::{Hypothesis, LiftingParams, Mode, OutputTable, Outcome, SimResult, Snapshot, TruncationReading};
use lifting_core::space::format_bits;
use lifting_core::verify::status_text;
use lifting_core::{Coords, Rational};
use serde::{Deserialize, Serialize};

use crate::formats::{Rat, Speaker};

/// `bits + log2(log2_of)`, an exact deficiency term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogTerm {
    pub bits: u32,
    pub log2_of: Rat,
}

/// Deficiency of the free parts of `X` and `Y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deficiency {
    pub x: LogTerm,
    pub y: LogTerm,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFile {
    pub step: String,
    pub rho: String,
    pub transcript_bits: usize,
    pub x_support: usize,
    pub y_support: usize,
    pub deficiency: Deficiency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFile {
    pub j: usize,
    pub parts: usize,
    pub p_geq: Rat,
    pub mass: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundFlags {
    pub speaker_dense: bool,
    pub listener_dense: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundFile {
    pub index: usize,
    pub speaker: Speaker,
    pub free: Vec<u32>,
    pub listener_delta: Rat,
    pub dangerous_values: usize,
    pub discarded: usize,
    pub discarded_mass: Rat,
    pub message: String,
    pub p_m: Rat,
    pub k_product: Option<Rat>,
    pub class: Option<ClassFile>,
    pub query: Vec<u32>,
    pub x_value: String,
    pub z_value: String,
    pub y_event: Rat,
    pub deficiency_before: Option<Deficiency>,
    pub deficiency_after: Option<Deficiency>,
    pub flags: RoundFlags,
    pub steps: Vec<StepFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerFile {
    pub mismatches: usize,
    pub flagged: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFile {
    pub status: String,
    pub output: Option<String>,
    pub transcript: String,
    pub rho: String,
    pub queries: Vec<Vec<u32>>,
    pub total_queries: u32,
    pub depth: usize,
    /// A preimage `(x, y)` reproducing the transcript, when the run completed.
    pub certificate: Option<[String; 2]>,
    pub ledger: LedgerFile,
    pub rounds: Vec<RoundFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub outcome: String,
    pub mass: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchFile {
    pub weight: Rat,
    pub status: String,
    pub transcript: String,
    pub output: Option<String>,
    pub total_queries: u32,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationFile {
    pub k_halt: Rat,
    pub truncation_halt: Rat,
    pub violation: Rat,
    pub error_mass: Rat,
    /// Statistical distance to the transcript distribution on uniform `G^{-1}(z)`.
    pub tv_to_reference: Option<Rat>,
    pub outcomes: Vec<OutcomeFile>,
    pub ledger_mismatches: usize,
    pub ledger_flagged: usize,
    pub branches: Vec<BranchFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub mode: String,
    pub eta: Rat,
    pub c: Rat,
    pub h: Rat,
    pub b: u32,
    pub n: u32,
    pub eps: Rat,
    pub delta: Rat,
    pub tau: Rat,
    pub gamma: Rat,
    pub truncation: String,
    pub nonstandard: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFile {
    pub name: String,
    pub holds: Option<bool>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFile {
    pub gadget: String,
    pub z: String,
    pub seed: Option<u64>,
    pub communication: u32,
    pub rounds_bound: u32,
    pub params: ParamsFile,
    pub hypotheses: Vec<HypothesisFile>,
    pub run: Option<RunFile>,
    pub enumeration: Option<EnumerationFile>,
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Deterministic => "det",
        Mode::Randomized => "rand",
    }
}

pub fn params_file(p: &LiftingParams) -> ParamsFile {
    ParamsFile {
        mode: mode_name(p.mode).to_string(),
        eta: Rat(p.eta.clone()),
        c: Rat(p.c.clone()),
        h: Rat(p.h.clone()),
        b: p.b,
        n: p.n,
        eps: Rat(p.eps.clone()),
        delta: Rat(p.delta.clone()),
        tau: Rat(p.tau.clone()),
        gamma: Rat(p.gamma.clone()),
        truncation: match p.truncation {
            TruncationReading::Scaled => "scaled",
            TruncationReading::Constant => "constant",
        }
        .to_string(),
        nonstandard: p.nonstandard,
    }
}

pub fn hypotheses_file(h: &[Hypothesis]) -> Vec<HypothesisFile> {
    h.iter().map(|h| HypothesisFile { name: h.name.clone(), holds: h.holds, detail: h.detail.clone() }).collect()
}

fn coords(c: Coords) -> Vec<u32> {
    c.iter().map(|i| i + 1).collect()
}

fn deficiency(s: &Snapshot, b: u32) -> Deficiency {
    let free = s.rho.free().len() * b;
    Deficiency {
        x: LogTerm { bits: free, log2_of: Rat(s.max_x.clone()) },
        y: LogTerm { bits: free, log2_of: Rat(s.max_y.clone()) },
    }
}

fn speaker(p: Party) -> Speaker {
    match p {
        Party::Alice => Speaker::A,
        Party::Bob => Speaker::B,
    }
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn ledger_file(l: &LedgerReport) -> LedgerFile {
    let mut failures: Vec<String> = l
        .checks
        .iter()
        .filter(|c| c.applicable && !c.holds)
        .map(|c| format!("{} (round {})", c.name, c.round.map_or_else(|| "-".to_string(), |r| r.to_string())))
        .collect();
    failures.extend(l.recompute_mismatches.iter().cloned());
    failures.extend(l.rectangle_failures.iter().cloned());
    failures.extend(l.negative_deficiency.iter().cloned());
    LedgerFile { mismatches: l.mismatches(), flagged: l.flagged(), failures }
}

pub fn run_file(r: &SimResult, certificate: Option<(u32, u32)>, ledger: &LedgerReport) -> RunFile {
    let b = r.trace.params.b;
    let nb = r.trace.params.n * b;
    let rounds = r
        .trace
        .rounds
        .iter()
        .map(|rec| RoundFile {
            index: rec.index,
            speaker: speaker(rec.speaker),
            free: coords(rec.free),
            listener_delta: Rat(rec.listener_delta.clone()),
            dangerous_values: rec.dangerous_values,
            discarded: rec.discarded,
            discarded_mass: Rat(rec.discarded_mass.clone()),
            message: bits(&rec.message),
            p_m: Rat(rec.p_m.clone()),
            k_product: rec.k_product.clone().map(Rat),
            class: rec.class.as_ref().map(|c| ClassFile { j: c.j, parts: c.parts, p_geq: Rat(c.p_geq.clone()), mass: Rat(c.mass.clone()) }),
            query: coords(rec.query),
            x_value: format_bits(rec.x_value, rec.query.len() * b),
            z_value: format_bits(rec.z_value, rec.query.len()),
            y_event: Rat(rec.y_event.clone()),
            deficiency_before: rec.snapshots.first().map(|s| deficiency(s, b)),
            deficiency_after: rec.snapshots.last().map(|s| deficiency(s, b)),
            flags: RoundFlags { speaker_dense: rec.speaker_dense, listener_dense: rec.listener_dense },
            steps: rec
                .snapshots
                .iter()
                .map(|s| StepFile {
                    step: s.step.name().to_string(),
                    rho: s.rho.to_string(),
                    transcript_bits: s.pi_len,
                    x_support: s.xset.len(),
                    y_support: s.yset.len(),
                    deficiency: deficiency(s, b),
                })
                .collect(),
        })
        .collect();
    RunFile {
        status: status_text(&r.status),
        output: r.output.clone(),
        transcript: r.transcript.to_string(),
        rho: r.rho.to_string(),
        queries: r.queries.iter().map(|&q| coords(q)).collect(),
        total_queries: r.total_queries(),
        depth: r.depth,
        certificate: certificate.map(|(x, y)| [format_bits(x, nb), format_bits(y, nb)]),
        ledger: ledger_file(ledger),
        rounds,
    }
}

pub fn outcome_name(o: &Outcome) -> String {
    match o {
        Outcome::Transcript(t) => format!("transcript {t}"),
        Outcome::Error => String::from("ERROR"),
        Outcome::Violation => String::from("violation"),
    }
}

pub fn enumeration_file(t: &OutputTable, tv: Option<Rational>, mismatches: usize, flagged: usize) -> EnumerationFile {
    EnumerationFile {
        k_halt: Rat(t.k_halt.clone()),
        truncation_halt: Rat(t.truncation_halt.clone()),
        violation: Rat(t.violation.clone()),
        error_mass: Rat(t.error_mass()),
        tv_to_reference: tv.map(Rat),
        outcomes: t.dist.iter().map(|(o, m)| OutcomeFile { outcome: outcome_name(o), mass: Rat(m.clone()) }).collect(),
        ledger_mismatches: mismatches,
        ledger_flagged: flagged,
        branches: t
            .runs
            .iter()
            .map(|(w, r)| BranchFile {
                weight: Rat(w.clone()),
                status: status_text(&r.status),
                transcript: r.transcript.to_string(),
                output: r.output.clone(),
                total_queries: r.total_queries(),
                depth: r.depth,
            })
            .collect(),
    }
}
