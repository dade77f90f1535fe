//! The subcommands, returning their printed text and any file contents.

use std::collections::BTreeMap;
use std::fmt::Write;

use anyhow::{bail, Context, Result};
use lifting_core::dtree::{brute_force_ddt_with_budget, SearchProblem};
use lifting_core::gadget::{check_xor_lemma_with, discrepancy_with_budget};
use lifting_core::protocol::{canonical_protocol, complexity, RandomizedProtocol, Transcript};
use lifting_core::rational::{int, parse_rational, ratio};
use lifting_core::simulate::ledger::ledger_assertions;
use lifting_core::simulate::{
    certify_transcript, distance_to_reference, enumerate_output_distribution_with_budget, enumerate_randomized_protocol_with_budget,
    lift_deterministic_with_budget, lift_randomized_with_budget, reference_distribution, sample_index, LiftingParams, Mode,
};
use lifting_core::space::{format_bits, parse_bits};
use lifting_core::verify::{merge, plan, run_task, CorpusReport, CorpusSpec};
use lifting_core::{Distribution, Gadget, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::formats::{show, ProtocolFile, TreeFile};
use crate::trace::{enumeration_file, hypotheses_file, params_file, run_file, TraceFile};
use crate::Budgets;

/// The default constant of the XOR-lemma upper bound.
pub const XOR_UPPER_CONSTANT: i64 = 64;

fn set_text(points: &[u32], width: u32) -> String {
    let v: Vec<String> = points.iter().map(|&p| format_bits(p, width)).collect();
    format!("{{{}}}", v.join(", "))
}

pub fn gadget_analyze(g: &Gadget, ms: &[u32], budgets: &Budgets) -> Result<String> {
    let mut s = String::new();
    let d = discrepancy_with_budget(g, budgets.side)?;
    writeln!(s, "gadget {} (b = {})", g.name().unwrap_or("from file"), g.b())?;
    writeln!(s, "disc(g) = {}", show(&d.value))?;
    writeln!(s, "witness rectangle: A = {}, B = {}", set_text(&d.argmax.a, g.b()), set_text(&d.argmax.b, g.b()))?;
    writeln!(s, "xor lemma: disc(g)^m <= disc(g^xor m) <= min(1, ({XOR_UPPER_CONSTANT} disc(g))^m)")?;
    for &m in ms {
        match check_xor_lemma_with(g, m, &int(XOR_UPPER_CONSTANT), budgets.side) {
            Ok(r) => writeln!(
                s,
                "  m = {m}: {} <= {} <= {}  {}",
                show(&r.lower),
                show(&r.value),
                show(&r.upper),
                if r.sandwich_holds { "holds" } else { "VIOLATED" }
            )?,
            Err(e) => writeln!(s, "  m = {m}: refused ({e})")?,
        }
    }
    Ok(s)
}

/// Options of a `lift` run.
#[derive(Clone, Debug)]
pub struct LiftOptions {
    pub z: String,
    pub mode: Mode,
    pub eta: Option<String>,
    pub c: Option<String>,
    pub h: Option<String>,
    pub seed: u64,
    pub enumerate: bool,
}

fn rational_arg(v: &Option<String>, name: &str, default: Rational) -> Result<Rational> {
    match v {
        Some(t) => parse_rational(t).with_context(|| format!("--{name}")),
        None => Ok(default),
    }
}

/// Mixture of the component reference distributions.
fn reference(rp: &RandomizedProtocol, g: &Gadget, z: u32) -> Result<Distribution<Transcript>> {
    let mut mass: BTreeMap<Transcript, Rational> = BTreeMap::new();
    for (p, w) in rp.components() {
        for (t, m) in reference_distribution(p, g, z)?.iter() {
            *mass.entry(t.clone()).or_insert_with(|| int(0)) += m * w;
        }
    }
    Ok(Distribution::new(mass)?)
}

pub fn lift(rp: &RandomizedProtocol, g: &Gadget, opts: &LiftOptions, budgets: &Budgets) -> Result<(String, TraceFile)> {
    let space = rp.space();
    if g.b() != space.b {
        bail!("dimension mismatch: the protocol has b = {} but the gadget has b = {}", space.b, g.b());
    }
    let (z, len) = parse_bits(&opts.z).context("--z")?;
    if len != space.n {
        bail!("dimension mismatch: --z has {len} bits but the protocol has n = {}", space.n);
    }
    let eta = rational_arg(&opts.eta, "eta", ratio(1, 2))?;
    let c = rational_arg(&opts.c, "c", int(64))?;
    let h = rational_arg(&opts.h, "h", int(1))?;
    let params = LiftingParams::new(opts.mode, eta, c, h, space.b, space.n)?;
    let comm = rp.components().iter().map(|(p, _)| complexity(p)).fold((0, 0), |a, c| (a.0.max(c.c), a.1.max(c.r)));

    let mut s = String::new();
    let mut trace = TraceFile {
        gadget: g.name().unwrap_or("from file").to_string(),
        z: opts.z.clone(),
        seed: None,
        communication: comm.0,
        rounds_bound: comm.1,
        params: params_file(&params),
        hypotheses: Vec::new(),
        run: None,
        enumeration: None,
    };
    writeln!(s, "mode {}, eps = {}, delta = {}, tau = {}", trace.params.mode, show(&params.eps), show(&params.delta), show(&params.tau))?;
    writeln!(s, "protocol: n = {}, b = {}, C = {}, r = {}", space.n, space.b, comm.0, comm.1)?;

    match (opts.mode, opts.enumerate) {
        (Mode::Deterministic, true) => bail!("--enumerate needs --mode rand"),
        (Mode::Deterministic, false) => {
            let [(p, _)] = rp.components() else {
                bail!("deterministic mode needs a protocol with one component");
            };
            let r = lift_deterministic_with_budget(p, g, z, &params, budgets.sim)?;
            let cert = certify_transcript(&r, p, g, z);
            let ledger = ledger_assertions(&r, p, g);
            trace.hypotheses = hypotheses_file(&r.trace.hypotheses);
            let run = run_file(&r, cert, &ledger);
            summarize_run(&mut s, &run)?;
            trace.run = Some(run);
        }
        (Mode::Randomized, false) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let weights: Vec<Rational> = rp.components().iter().map(|(_, w)| w.clone()).collect();
            let k = sample_index(&mut rng, &weights);
            let p = &rp.components()[k].0;
            let r = lift_randomized_with_budget(p, g, z, &params, budgets.sim, &mut rng)?;
            let cert = certify_transcript(&r, p, g, z);
            let ledger = ledger_assertions(&r, p, g);
            trace.seed = Some(opts.seed);
            trace.hypotheses = hypotheses_file(&r.trace.hypotheses);
            let run = run_file(&r, cert, &ledger);
            if rp.components().len() > 1 {
                writeln!(s, "component: {k}")?;
            }
            summarize_run(&mut s, &run)?;
            trace.run = Some(run);
        }
        (Mode::Randomized, true) => {
            let mut mismatches = 0;
            let mut flagged = 0;
            for (p, _) in rp.components() {
                let t = enumerate_output_distribution_with_budget(p, g, z, &params, budgets.sim)?;
                for (_, r) in &t.runs {
                    let l = ledger_assertions(r, p, g);
                    mismatches += l.mismatches();
                    flagged += l.flagged();
                }
                if trace.hypotheses.is_empty() {
                    if let Some((_, r)) = t.runs.first() {
                        trace.hypotheses = hypotheses_file(&r.trace.hypotheses);
                    }
                }
            }
            let table = enumerate_randomized_protocol_with_budget(rp, g, z, &params, budgets.sim)?;
            let tv = reference(rp, g, z).ok().map(|r| distance_to_reference(&table, &r));
            let e = enumeration_file(&table, tv, mismatches, flagged);
            writeln!(s, "branches: {}", e.branches.len())?;
            for o in &e.outcomes {
                writeln!(s, "  {}: {}", o.outcome, show(&o.mass.0))?;
            }
            writeln!(s, "error-halt mass: {} (K: {}, truncation: {})", show(&e.error_mass.0), show(&e.k_halt.0), show(&e.truncation_halt.0))?;
            writeln!(s, "violation mass: {}", show(&e.violation.0))?;
            match &e.tv_to_reference {
                Some(tv) => writeln!(s, "TV to reference: {}", show(&tv.0))?,
                None => writeln!(s, "TV to reference: unavailable")?,
            }
            writeln!(s, "ledger: {mismatches} mismatches, {flagged} clauses flagged")?;
            trace.enumeration = Some(e);
        }
    }
    let failed: Vec<&str> = trace.hypotheses.iter().filter(|h| h.holds == Some(false)).map(|h| h.name.as_str()).collect();
    if !failed.is_empty() {
        writeln!(s, "failed regime hypotheses: {}", failed.join("; "))?;
    }
    Ok((s, trace))
}

fn summarize_run(s: &mut String, run: &crate::trace::RunFile) -> Result<()> {
    writeln!(s, "status: {}", run.status)?;
    writeln!(s, "output: {}", run.output.as_deref().unwrap_or("-"))?;
    writeln!(s, "transcript: {}", if run.transcript.is_empty() { "(empty)" } else { &run.transcript })?;
    let q: Vec<String> = run.queries.iter().map(|q| format!("{q:?}")).collect();
    writeln!(s, "queries: {} in {} rounds {}", run.total_queries, run.depth, q.join(" "))?;
    writeln!(s, "restriction: {}", run.rho)?;
    match &run.certificate {
        Some([x, y]) => writeln!(s, "certified: yes (x = {x}, y = {y})")?,
        None => writeln!(s, "certified: no")?,
    }
    writeln!(s, "ledger: {} mismatches, {} clauses flagged", run.ledger.mismatches, run.ledger.flagged)?;
    Ok(())
}

/// `D^dt` of a problem with an optimal tree; optionally the canonical protocol for `g`.
pub fn oracle_dt(prob: &SearchProblem, g: Option<&Gadget>, budgets: &Budgets) -> Result<(String, TreeFile, Option<ProtocolFile>)> {
    let r = brute_force_ddt_with_budget(prob, budgets.dt_n).map_err(|e| anyhow::anyhow!("refused: {e}"))?;
    let mut s = String::new();
    writeln!(s, "D^dt({}) = {}", if prob.name.is_empty() { "problem" } else { &prob.name }, r.value)?;
    writeln!(s, "tree depth {}, query complexity {}", r.tree.depth(), r.tree.query_complexity())?;
    let proto = match g {
        Some(g) => {
            let p = canonical_protocol(&r.tree, g);
            let c = complexity(&p);
            let bound = r.value * (g.b() + 1);
            writeln!(s, "canonical protocol with g = {}: C = {} <= D^dt*(b+1) = {}", g.name().unwrap_or("from file"), c.c, bound)?;
            Some(ProtocolFile::from_protocol(&p))
        }
        None => None,
    };
    Ok((s, TreeFile::from_tree(&r.tree), proto))
}

/// Run every corpus task on a pool of `jobs` threads; the report is independent of `jobs`.
pub fn verify(spec: &CorpusSpec, jobs: usize) -> Result<CorpusReport> {
    let tasks = plan(spec);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let outputs = pool.install(|| tasks.par_iter().map(|&t| run_task(spec, t)).collect());
    Ok(merge(spec.seed, outputs))
}
