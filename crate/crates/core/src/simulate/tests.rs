use alloc::vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ledger::ledger_assertions;
use super::*;
use crate::dtree::{brute_force_ddt, SearchProblem};
use crate::protocol::canonical_protocol;
use crate::rational::{pow2, ratio};

fn ip2() -> Gadget {
    Gadget::builtin("ip2").unwrap()
}

fn parity_protocol() -> ProtocolTree {
    let t = brute_force_ddt(&SearchProblem::parity(2)).unwrap().tree;
    canonical_protocol(&t, &ip2())
}

#[test]
fn zero_communication() {
    let space = BlockSpace::new(2, 2);
    let p = ProtocolTree::leaf(space, "out");
    let params = LiftingParams::standard(Mode::Deterministic, 2, 2);
    let r = lift_deterministic(&p, &ip2(), 0b10, &params).unwrap();
    assert_eq!(r.status, Status::Done);
    assert_eq!(r.total_queries(), 0);
    assert!(r.transcript.bits.is_empty());
    assert_eq!(r.output.as_deref(), Some("out"));
    assert_eq!(r.xset.len(), 16);
    assert_eq!(r.yset.len(), 16);
    assert_eq!(certify_transcript(&r, &p, &ip2(), 0b10), Some((0b0100, 0b0100)));

    let rp = LiftingParams::standard(Mode::Randomized, 2, 2);
    let t = enumerate_output_distribution(&p, &ip2(), 0, &rp).unwrap();
    assert_eq!(t.dist.mass(&Outcome::Transcript(Transcript::default())), Rational::one());
    assert!(t.error_mass().is_zero());
}

#[test]
fn constant_first_bit_leaves_deficiency_alone() {
    // Alice sends 0 regardless, then the protocol stops.
    let space = BlockSpace::new(2, 2);
    let nodes = vec![
        ProtocolNode::Internal { speaker: Party::Alice, bit_map: vec![false; 16], children: [1, 2] },
        ProtocolNode::Leaf("a".into()),
        ProtocolNode::Leaf("b".into()),
    ];
    let p = ProtocolTree::new(space, nodes, 0).unwrap();
    let params = LiftingParams::standard(Mode::Deterministic, 2, 2);
    let r = lift_deterministic(&p, &ip2(), 0b11, &params).unwrap();
    let round = &r.trace.rounds[0];
    assert_eq!(round.p_m, Rational::one());
    let (a, b) = (round.snapshot(Step::Discard).unwrap(), round.snapshot(Step::Message).unwrap());
    assert_eq!((&a.max_x, &a.max_y), (&b.max_x, &b.max_y));

    // Every randomized branch sends the same bit and leaves K unchanged.
    let rp = LiftingParams::standard(Mode::Randomized, 2, 2);
    let t = enumerate_output_distribution(&p, &ip2(), 0b11, &rp).unwrap();
    for (_, run) in &t.runs {
        assert_eq!(run.trace.rounds[0].k_product, Some(Rational::one()));
        assert_eq!(run.transcript, r.transcript);
    }
    assert!(t.error_mass().is_zero());
}

#[test]
fn canonical_parity_runs_certify() {
    let p = parity_protocol();
    let comm = complexity(&p);
    let params = LiftingParams::standard(Mode::Deterministic, 2, 2);
    for z in 0..4 {
        let r = lift_deterministic(&p, &ip2(), z, &params).unwrap();
        assert!(r.depth <= comm.r as usize);
        match &r.status {
            Status::Done => {
                let (x, y) = certify_transcript(&r, &p, &ip2(), z).expect("certified");
                assert_eq!(ip2().lift(p.space(), x, y), z);
                assert_eq!(r.output.as_deref(), Some(if z.count_ones() % 2 == 1 { "1" } else { "0" }));
            }
            Status::Violation { reason, .. } => assert!(reason.contains("violated hypotheses")),
            other => panic!("unexpected status {other:?}"),
        }
        let rep = ledger_assertions(&r, &p, &ip2());
        assert_eq!(rep.mismatches(), 0, "{rep:?}");
    }
}

#[test]
fn randomized_enumeration_error_bound() {
    let p = parity_protocol();
    let params = LiftingParams::standard(Mode::Randomized, 2, 2);
    for z in 0..4 {
        let t = enumerate_output_distribution(&p, &ip2(), z, &params).unwrap();
        let total: Rational = t.runs.iter().map(|(q, _)| q.clone()).sum();
        assert_eq!(total, Rational::one());
        assert!(t.k_halt < pow2(-2));
        for (_, r) in &t.runs {
            assert!(r.depth <= 4);
            assert_eq!(ledger_assertions(r, &p, &ip2()).mismatches(), 0);
        }
        let reference = reference_distribution(&p, &ip2(), z).unwrap();
        let d = distance_to_reference(&t, &reference);
        assert!(d <= Rational::one());
    }
}

#[test]
fn sampled_runs_are_reproducible() {
    let p = parity_protocol();
    let params = LiftingParams::standard(Mode::Randomized, 2, 2);
    let a = lift_randomized(&p, &ip2(), 0b01, &params, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let b = lift_randomized(&p, &ip2(), 0b01, &params, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(a, b);
    let rp = RandomizedProtocol::deterministic(p.clone());
    let c = lift_randomized_protocol(&rp, &ip2(), 0b01, &params, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    assert_eq!(a, c);
}

#[test]
fn mixture_is_weighted() {
    let p = parity_protocol();
    let q = ProtocolTree::leaf(p.space(), "0");
    let params = LiftingParams::standard(Mode::Randomized, 2, 2);
    let rp = RandomizedProtocol::new(vec![(p.clone(), ratio(1, 2)), (q.clone(), ratio(1, 2))]).unwrap();
    let mix = enumerate_randomized_protocol(&rp, &ip2(), 0b10, &params).unwrap();
    let a = enumerate_output_distribution(&p, &ip2(), 0b10, &params).unwrap();
    let b = enumerate_output_distribution(&q, &ip2(), 0b10, &params).unwrap();
    assert_eq!(mix.error_mass(), (a.error_mass() + b.error_mass()) / Rational::from_integer(2.into()));
    for (o, m) in mix.dist.iter() {
        let want = (a.dist.mass(o) + b.dist.mass(o)) / Rational::from_integer(2.into());
        assert_eq!(*m, want);
    }
}

#[test]
fn reference_for_xor_sending_x() {
    // n = 1, b = 1, g = XOR: Alice sends x.
    let space = BlockSpace::new(1, 1);
    let nodes = vec![
        ProtocolNode::Internal { speaker: Party::Alice, bit_map: vec![false, true], children: [1, 2] },
        ProtocolNode::Leaf("0".into()),
        ProtocolNode::Leaf("1".into()),
    ];
    let p = ProtocolTree::new(space, nodes, 0).unwrap();
    let g = Gadget::builtin("xor1").unwrap();
    let d = reference_distribution(&p, &g, 0).unwrap();
    assert_eq!(d.len(), 2);
    assert!(d.iter().all(|(_, m)| *m == ratio(1, 2)));
    let and = Gadget::builtin("const0").unwrap();
    assert!(reference_distribution(&p, &and, 1).is_err());
}

#[test]
fn shape_and_mode_errors() {
    let p = parity_protocol();
    let params = LiftingParams::standard(Mode::Deterministic, 1, 2);
    assert!(matches!(lift_deterministic(&p, &ip2(), 0, &params), Err(SimError::Shape(_))));
    let params = LiftingParams::standard(Mode::Randomized, 2, 2);
    assert!(matches!(lift_deterministic(&p, &ip2(), 0, &params), Err(SimError::Params(_))));
}

#[test]
fn exact_sampler_hits_every_option() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = vec![ratio(1, 3), ratio(2, 3)];
    let mut seen = [0u32; 2];
    for _ in 0..300 {
        seen[sample_index(&mut rng, &w)] += 1;
    }
    assert!(seen[0] > 60 && seen[1] > 140);
}

/// Alice sends `[x = v]`, then Bob sends `[y = w]`: both messages are rare.
fn skewed_protocol(v: u32, w: u32) -> ProtocolTree {
    let space = BlockSpace::new(2, 2);
    let alice: Vec<bool> = (0..16).map(|x| x == v).collect();
    let bob: Vec<bool> = (0..16).map(|y| y == w).collect();
    let nodes = vec![
        ProtocolNode::Internal { speaker: Party::Alice, bit_map: alice, children: [1, 2] },
        ProtocolNode::Internal { speaker: Party::Bob, bit_map: bob.clone(), children: [3, 4] },
        ProtocolNode::Internal { speaker: Party::Bob, bit_map: bob, children: [5, 6] },
        ProtocolNode::Leaf("00".into()),
        ProtocolNode::Leaf("01".into()),
        ProtocolNode::Leaf("10".into()),
        ProtocolNode::Leaf("11".into()),
    ];
    ProtocolTree::new(space, nodes, 0).unwrap()
}

#[test]
fn rare_messages_trigger_k_halts() {
    let p = skewed_protocol(0b0101, 0b1111);
    let params = LiftingParams::standard(Mode::Randomized, 2, 2);
    let t = enumerate_output_distribution(&p, &ip2(), 0b11, &params).unwrap();
    assert!(t.k_halt > Rational::zero());
    assert!(t.k_halt < pow2(-2));
    for (_, r) in &t.runs {
        if r.status == Status::ErrorHalt(HaltKind::K) {
            let k = r.trace.rounds.last().unwrap().k_product.clone().unwrap();
            assert!(params.k_exceeded(&k, 2));
        }
        assert_eq!(ledger_assertions(r, &p, &ip2()).mismatches(), 0);
    }
}
