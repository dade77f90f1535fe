//! Exact recomputation of the deficiency
//! `2·b·|free(ρ)| − H∞(X_free(ρ)) − H∞(Y_free(ρ))` along a trace.
//!
//! A snapshot stores the max-probabilities `m_X`, `m_Y`, so a change of
//! deficiency between two snapshots is `2·b·Δ|F| + log(m_X'·m_Y' / (m_X·m_Y))`.
//! Every bound is compared in that cleared form.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Zero};

use super::{check_rectangle, max_free_prob, Mode, RoundRecord, SimResult, Snapshot, Step};
use crate::gadget::Gadget;
use crate::logcmp::{cmp_pow2, LogForm};
use crate::protocol::ProtocolTree;
use crate::rational::{int, ratio, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseCheck {
    pub name: String,
    pub round: Option<usize>,
    /// The clause's recorded preconditions held.
    pub applicable: bool,
    /// The clause is trivially true (for instance `I = ∅`).
    pub vacuous: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LedgerReport {
    pub checks: Vec<ClauseCheck>,
    /// Snapshot values that disagree with a recomputation from the stored sets.
    pub recompute_mismatches: Vec<String>,
    pub rectangle_failures: Vec<String>,
    pub negative_deficiency: Vec<String>,
    /// Rounds whose start violated the alternating density invariant.
    pub density_invariant_failures: Vec<usize>,
}

impl LedgerReport {
    /// Applicable clauses that fail plus every recomputation or consistency failure.
    pub fn mismatches(&self) -> usize {
        self.checks.iter().filter(|c| c.applicable && !c.holds).count()
            + self.recompute_mismatches.len()
            + self.rectangle_failures.len()
            + self.negative_deficiency.len()
    }

    /// Clauses skipped because a precondition failed.
    pub fn flagged(&self) -> usize {
        self.checks.iter().filter(|c| !c.applicable).count()
    }

    pub fn ok(&self) -> bool {
        self.mismatches() == 0
    }
}

fn ratio_of(a: &Snapshot, b: &Snapshot) -> (Rational, i64) {
    let r = (&b.max_x * &b.max_y) / (&a.max_x * &a.max_y);
    let df = i64::from(b.rho.free().len()) - i64::from(a.rho.free().len());
    (r, df)
}

/// The change from `a` to `b` is at most `t + log(1/q)`; strict if asked.
fn change_at_most(a: &Snapshot, b: &Snapshot, bits: u32, t: &Rational, q: &Rational, strict: bool) -> bool {
    let (r, df) = ratio_of(a, b);
    let e = t - int(2 * i64::from(bits) * df);
    let o = cmp_pow2(&(r * q), &e);
    if strict {
        o == Ordering::Less
    } else {
        o != Ordering::Greater
    }
}

struct Round<'a> {
    rec: &'a RoundRecord,
    bits: u32,
}

impl Round<'_> {
    fn snap(&self, s: Step) -> Option<&Snapshot> {
        self.rec.snapshot(s)
    }

    fn check(&self, out: &mut Vec<ClauseCheck>, name: &str, from: Step, to: Step, applicable: bool, vacuous: bool, t: Rational, q: Rational, strict: bool) {
        let (Some(a), Some(b)) = (self.snap(from), self.snap(to)) else {
            return;
        };
        let holds = change_at_most(a, b, self.bits, &t, &q, strict);
        out.push(ClauseCheck { name: String::from(name), round: Some(self.rec.index), applicable, vacuous, holds });
    }
}

/// Recompute every deficiency change of a run and check the per-step clauses.
pub fn ledger_assertions(result: &SimResult, p: &ProtocolTree, g: &Gadget) -> LedgerReport {
    let params = &result.trace.params;
    let bits = params.b;
    let b = int(i64::from(bits));
    let space = p.space();
    let mut rep = LedgerReport::default();

    for rec in &result.trace.rounds {
        if !(rec.speaker_dense && rec.listener_dense) {
            rep.density_invariant_failures.push(rec.index);
        }
        for s in &rec.snapshots {
            let free = s.rho.free();
            let (mx, my) = (max_free_prob(space, &s.xset, free), max_free_prob(space, &s.yset, free));
            let label = format!("round {} {}", rec.index, s.step.name());
            if mx != s.max_x || my != s.max_y {
                rep.recompute_mismatches.push(label.clone());
            }
            if cmp_pow2(&(&mx * &my), &int(-2 * i64::from(bits * free.len()))) == Ordering::Less {
                rep.negative_deficiency.push(label.clone());
            }
            if !check_rectangle(p, g, &result.transcript, s) {
                rep.rectangle_failures.push(label);
            }
        }

        let r = Round { rec, bits };
        let out = &mut rep.checks;
        let one = Rational::one();
        let half_ok = rec.discarded_mass <= ratio(1, 2);
        let m = rec.message.len() as i64;
        let i = i64::from(rec.query.len());
        let empty = rec.query.is_empty();
        let ib = &b * int(i);
        r.check(out, "discard: increase <= 1", Step::RoundStart, Step::Discard, half_ok, false, one.clone(), one.clone(), false);
        r.check(out, "query: decrease >= b*|I|", Step::Restore, Step::Query, true, empty, -ib.clone(), one.clone(), false);
        r.check(out, "condition: increase <= |I|+1", Step::Query, Step::Condition, true, false, int(i + 1), one.clone(), false);

        match params.mode {
            Mode::Deterministic => {
                let heavy = cmp_pow2(&rec.p_m, &int(-m)) != Ordering::Less;
                r.check(out, "message: increase <= |M|", Step::Discard, Step::Message, heavy, false, int(m), one.clone(), false);
                r.check(out, "discard+message: increase <= |M|+1", Step::RoundStart, Step::Message, heavy && half_ok, false, int(m + 1), one.clone(), false);
                r.check(out, "restore: increase < delta*b*|I|", Step::Message, Step::Restore, !empty, empty, &params.delta * &ib, one.clone(), !empty);
                let coef = Rational::one() - &params.delta - int(2) / &b;
                r.check(
                    out,
                    "restore..condition: decrease >= (1-delta-2/b)*b*|I|",
                    Step::Message,
                    Step::Condition,
                    true,
                    empty,
                    -(coef * &ib),
                    one.clone(),
                    false,
                );
            }
            Mode::Randomized => {
                let p_m = rec.p_m.clone();
                r.check(out, "message: increase <= log(1/p_M)", Step::Discard, Step::Message, true, p_m.is_one(), Rational::zero(), p_m.clone(), false);
                r.check(out, "discard+message: increase <= log(1/p_M)+1", Step::RoundStart, Step::Message, half_ok, false, one.clone(), p_m, false);
                let Some(class) = &rec.class else { continue };
                let truncated = params.truncates(&class.p_geq);
                r.check(
                    out,
                    "restore: increase <= delta*b*|I| + log(1/p_geq)",
                    Step::Message,
                    Step::Restore,
                    true,
                    false,
                    &params.delta * &ib,
                    class.p_geq.clone(),
                    false,
                );
                // b|I| − δb|I| − log(1/p_geq) − (|I|+1), before any regime estimate.
                r.check(
                    out,
                    "restore..condition: decrease >= (1-delta)*b*|I| - log(1/p_geq) - |I| - 1",
                    Step::Message,
                    Step::Condition,
                    true,
                    false,
                    (&params.delta - Rational::one()) * &ib + int(i + 1),
                    class.p_geq.clone(),
                    false,
                );
                // The regime step (η/8)·b + log(2nb) + 3 <= (η/8 + 6/c)·b·|I|.
                let regime = !empty
                    && LogForm::constant(&params.eta * &b / int(8) + int(3) - (&params.eta / int(8) + int(6) / &params.c) * &ib)
                        .add_log2(&one, &int(2 * i64::from(params.n.max(1)) * i64::from(bits)))
                        .sign()
                        != Ordering::Greater;
                for (label, delta) in [
                    ("restore..condition: decrease >= (1-delta-eta/8-7/c)*b*|I|", params.delta.clone()),
                    ("restore..condition: decrease >= (1-delta'-eta/8-7/c)*b*|I| with delta' = 1-eta/8+eps/2", params.delta_alternative()),
                ] {
                    let coef = Rational::one() - delta - &params.eta / int(8) - int(7) / &params.c;
                    r.check(out, label, Step::Message, Step::Condition, regime && !truncated, empty, -(coef * &ib), one.clone(), false);
                }
            }
        }
    }

    rep.checks.push(query_bookkeeping(result, &rep));
    rep
}

/// `coef·b·(total queries) <= Σ per-round increase bounds`, valid once every round's clauses held.
fn query_bookkeeping(result: &SimResult, rep: &LedgerReport) -> ClauseCheck {
    let params = &result.trace.params;
    let b = int(i64::from(params.b));
    let q = int(i64::from(result.total_queries()));
    let rounds = &result.trace.rounds;
    let all_held = rep.checks.iter().all(|c| c.applicable && c.holds);
    let (coef, holds) = match params.mode {
        Mode::Deterministic => {
            let coef = Rational::one() - &params.delta - int(2) / &b;
            let budget: i64 = rounds.iter().map(|r| r.message.len() as i64 + 1).sum();
            let holds = &coef * &b * &q <= int(budget);
            (coef, holds)
        }
        Mode::Randomized => {
            let coef = Rational::one() - &params.delta - &params.eta / int(8) - int(7) / &params.c;
            let mut f = LogForm::constant(int(rounds.len() as i64) - &coef * &b * &q);
            for r in rounds {
                f = f.add_log2(&int(-1), &r.p_m);
            }
            (coef, f.sign() != Ordering::Less)
        }
    };
    ClauseCheck {
        name: String::from("queries: coef*b*total <= total increase"),
        round: None,
        applicable: all_held && coef > Rational::zero(),
        vacuous: result.total_queries() == 0,
        holds,
    }
}

