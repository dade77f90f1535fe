//! Exact property checks of conditional statements.
//!
//! Every instance gets one of three verdicts: pass (hypothesis and
//! conclusion hold), vacuous (hypothesis fails) or fail (hypothesis holds and
//! conclusion fails). A failing instance is recomputed from its inputs before
//! it is reported.

mod corpus;
mod lemmas;

pub use corpus::*;
pub use lemmas::*;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::logcmp::cmp_pow2;
use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Vacuous,
    Fail,
}

/// The bound a measured quantity is compared against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Bound {
    AtMost(Rational),
    Below(Rational),
    /// `measured <= 2^-q`.
    AtMostPow2(Rational),
    /// `measured < 2^-q`.
    BelowPow2(Rational),
}

impl Bound {
    pub fn admits(&self, m: &Rational) -> bool {
        match self {
            Bound::AtMost(v) => m <= v,
            Bound::Below(v) => m < v,
            Bound::AtMostPow2(q) => cmp_pow2(m, &-q.clone()) != Ordering::Greater,
            Bound::BelowPow2(q) => cmp_pow2(m, &-q.clone()) == Ordering::Less,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Bound::AtMost(v) => format!("<= {}", format_rational(v)),
            Bound::Below(v) => format!("< {}", format_rational(v)),
            Bound::AtMostPow2(q) => format!("<= 2^-({})", format_rational(q)),
            Bound::BelowPow2(q) => format!("< 2^-({})", format_rational(q)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub hypothesis: bool,
    pub measured: Option<Rational>,
    pub bound: Option<Bound>,
    pub conclusion: bool,
    /// Failed hypothesis clauses, or other context.
    pub note: String,
}

impl Instance {
    pub fn verdict(&self) -> Verdict {
        match (self.hypothesis, self.conclusion) {
            (false, _) => Verdict::Vacuous,
            (true, true) => Verdict::Pass,
            (true, false) => Verdict::Fail,
        }
    }

    /// An instance whose conclusion is the comparison of `measured` with `bound`.
    pub fn measured(id: String, hypothesis: bool, measured: Rational, bound: Bound, note: String) -> Instance {
        let conclusion = bound.admits(&measured);
        Instance { id, hypothesis, measured: Some(measured), bound: Some(bound), conclusion, note }
    }

    /// An implication checked directly; there is no separate hypothesis.
    pub fn implication(id: String, holds: bool, note: String) -> Instance {
        Instance { id, hypothesis: true, measured: None, bound: None, conclusion: holds, note }
    }

    /// `conclusion` agrees with the bound comparison, when there is one.
    fn self_consistent(&self) -> bool {
        match (&self.measured, &self.bound) {
            (Some(m), Some(b)) => b.admits(m) == self.conclusion,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub instance: Instance,
    /// The raw inputs, rendered.
    pub input: String,
    /// Recomputation from the inputs produced the same failing instance.
    pub reverified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaReport {
    pub lemma: String,
    pub passes: u64,
    pub vacuous: u64,
    pub fails: u64,
    /// Instances kept verbatim in the report.
    pub archived: Vec<Instance>,
    pub counterexamples: Vec<Counterexample>,
}

impl LemmaReport {
    pub fn new(lemma: &str) -> LemmaReport {
        LemmaReport {
            lemma: String::from(lemma),
            passes: 0,
            vacuous: 0,
            fails: 0,
            archived: Vec::new(),
            counterexamples: Vec::new(),
        }
    }

    pub fn total(&self) -> u64 {
        self.passes + self.vacuous + self.fails
    }

    /// Non-empty and without a single instance whose hypothesis held.
    pub fn all_vacuous(&self) -> bool {
        self.total() > 0 && self.vacuous == self.total()
    }

    /// Run `check`, count its instances, and recompute every failing one.
    pub fn record<F, D>(&mut self, archive: bool, input: D, check: F)
    where
        F: Fn() -> Vec<Instance>,
        D: FnOnce() -> String,
    {
        let first = check();
        let mut input = Some(input);
        let mut rendered = String::new();
        let mut again: Option<Vec<Instance>> = None;
        for inst in first {
            match inst.verdict() {
                Verdict::Pass => self.passes += 1,
                Verdict::Vacuous => self.vacuous += 1,
                Verdict::Fail => {
                    self.fails += 1;
                    if let Some(f) = input.take() {
                        rendered = f();
                    }
                    let second = again.get_or_insert_with(&check);
                    let reverified = inst.self_consistent() && second.iter().any(|s| *s == inst);
                    self.counterexamples.push(Counterexample { instance: inst.clone(), input: rendered.clone(), reverified });
                }
            }
            if archive {
                self.archived.push(inst);
            }
        }
    }

    /// Fold `other` (same lemma) into `self`, keeping order.
    pub fn merge(&mut self, other: LemmaReport) {
        self.passes += other.passes;
        self.vacuous += other.vacuous;
        self.fails += other.fails;
        self.archived.extend(other.archived);
        self.counterexamples.extend(other.counterexamples);
    }
}

#[cfg(test)]
mod tests;
