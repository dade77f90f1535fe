use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use super::*;
use crate::dist::BlockDist;
use crate::error::VerifyError;
use crate::gadget::Gadget;
use crate::rational::{int, ratio};
use crate::space::BlockSpace;
use crate::structure::{flat, Restriction, ScanBudget};

fn g(name: &str) -> Gadget {
    Gadget::builtin(name).unwrap()
}

fn constants() -> LemmaConstants {
    LemmaConstants { eta: int(2), c: int(64), h: int(8) }
}

#[test]
fn uniformity_with_nothing_free() {
    let space = BlockSpace::new(1, 1);
    let x = flat(space, &[1]);
    let y = flat(space, &[0]);
    let rho = Restriction::parse("1").unwrap();
    let r = check_multiplicative_uniformity(&x, &y, &rho, &g("xor1"), &ratio(1, 2), &constants());
    assert_eq!(r.archived.len(), 1);
    assert_eq!(r.archived[0].measured, Some(Rational::zero()));
    assert!(r.archived[0].conclusion);
}

#[test]
fn xor_is_exactly_uniform() {
    let space = BlockSpace::new(2, 1);
    let u = BlockDist::uniform(space);
    let r = check_multiplicative_uniformity(&u, &u, &Restriction::free_all(2), &g("xor1"), &ratio(1, 2), &constants());
    assert_eq!(r.archived.len(), 4);
    assert!(r.archived.iter().all(|i| i.measured == Some(Rational::zero())));
    // b >= c·log n fails at n = 2.
    assert_eq!(r.vacuous, 4);
    let one = BlockDist::uniform(BlockSpace::new(1, 1));
    let r = check_multiplicative_uniformity(&one, &one, &Restriction::free_all(1), &g("xor1"), &ratio(1, 2), &constants());
    assert_eq!(r.passes, 2);
}

#[test]
fn uniform_marginals_examples() {
    let space = BlockSpace::new(1, 1);
    let u = BlockDist::uniform(space);
    let k = LemmaConstants { h: int(10), ..constants() };
    let r = check_uniform_marginals(&u, &u, &Restriction::free_all(1), &g("xor1"), 0, &ratio(1, 2), &k).unwrap();
    assert_eq!(r.archived[0].measured, Some(Rational::zero()));
    assert_eq!(r.passes, 1);

    let x = flat(space, &[1]);
    let y = flat(space, &[1]);
    let rho = Restriction::parse("0").unwrap();
    let r = check_uniform_marginals(&x, &y, &rho, &g("xor1"), 0, &ratio(1, 2), &k).unwrap();
    assert_eq!(r.archived[0].measured, Some(Rational::zero()));

    let e = check_uniform_marginals(&x, &y, &rho, &g("xor1"), 1, &ratio(1, 2), &k);
    assert_eq!(e, Err(VerifyError::EmptyFiber));
}

#[test]
fn main_lemma_examples() {
    let space = BlockSpace::new(2, 1);
    let u = BlockDist::uniform(space);
    let r = check_main_lemma(&u, &u, &Restriction::free_all(2), &g("xor1"), &ratio(1, 2), &ratio(1, 2), &constants(), ScanBudget::default())
        .unwrap();
    let inst = &r.archived[0];
    assert_eq!(inst.measured, Some(Rational::zero()));
    assert!(!inst.hypothesis);
    assert_eq!(inst.verdict(), Verdict::Vacuous);
    assert_eq!((r.passes, r.vacuous, r.fails), (0, 1, 0));
}

#[test]
fn claims_on_uniform_xor() {
    let space = BlockSpace::new(2, 1);
    let u = BlockDist::uniform(space);
    for x in space.points() {
        let [s, b] = check_claims(x, &u, &g("xor1"), &ratio(1, 2), &int(64), 2);
        assert_eq!((s.passes, b.passes), (1, 1));
    }
}

#[test]
fn bounds() {
    assert!(Bound::AtMostPow2(int(2)).admits(&ratio(1, 4)));
    assert!(!Bound::BelowPow2(int(2)).admits(&ratio(1, 4)));
    assert!(Bound::BelowPow2(ratio(1, 2)).admits(&ratio(7, 10)));
    assert!(!Bound::BelowPow2(ratio(1, 2)).admits(&ratio(71, 100)));
}

#[test]
fn empty_spec_is_empty() {
    let r = run_corpus(&CorpusSpec::default());
    assert!(r.lemmas.is_empty() && r.simulations.is_empty());
    assert!(r.success());
}

#[test]
fn planted_violation_is_caught() {
    let r = run_corpus(&CorpusSpec::planted(1));
    assert!(!r.success());
    let ce = &r.lemma("xor-lemma").unwrap().counterexamples;
    assert_eq!(ce.len(), 1);
    assert!(ce[0].reverified);
    assert!(ce[0].input.contains("m=2"));
}

#[test]
fn vacuity_is_flagged() {
    let mut r = LemmaReport::new("x");
    r.record(false, alloc::string::String::new, || {
        vec![Instance::implication("a".into(), true, "".into()), Instance { hypothesis: false, ..Instance::implication("b".into(), false, "".into()) }]
    });
    assert_eq!((r.passes, r.vacuous), (1, 1));
    assert!(!r.all_vacuous());
    let mut v = LemmaReport::new("y");
    v.record(false, alloc::string::String::new, || vec![Instance { hypothesis: false, ..Instance::implication("b".into(), false, "".into()) }]);
    assert!(v.all_vacuous());
}

#[test]
fn prefix_free_code_counts() {
    let mut counts = Vec::new();
    for d in 0..4 {
        let mut k = 0u64;
        for_each_prefix_free_code(d, |_| k += 1);
        counts.push(k);
    }
    assert_eq!(counts, vec![1, 4, 25, 676]);
}

#[test]
fn corpus_is_deterministic() {
    let mut spec = CorpusSpec::desk(3);
    spec.kraft = None;
    spec.extractor = None;
    spec.claims.as_mut().unwrap().supports = 2;
    spec.structured.as_mut().unwrap().instances = 2;
    spec.main_lemma = None;
    assert_eq!(run_corpus(&spec), run_corpus(&spec));
}
