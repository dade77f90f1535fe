use std::cmp::Ordering;

use lifting_core::dist::Distribution;
use lifting_core::dtree::{brute_force_ddt, run_tree, solves, SearchProblem};
use lifting_core::fourier::{fourier_bias_identity_holds, fourier_inversion, fourier_transform};
use lifting_core::gadget::{discrepancy, random_gadget};
use lifting_core::logcmp::cmp_pow2;
use lifting_core::protocol::{canonical_protocol, kraft_heavy_message, run_protocol, Party, ProtocolNode, ProtocolTree};
use lifting_core::rational::{int, pow2, ratio};
use lifting_core::simulate::ledger::ledger_assertions;
use lifting_core::simulate::{certify_transcript, enumerate_output_distribution, lift_deterministic, LiftingParams, Mode, Status};
use lifting_core::structure::{check_fix, check_partition, density_restoring_fix, density_restoring_partition, is_dense};
use lifting_core::{BlockDist, BlockSpace, Gadget, Rational};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist_from(weights: &[u32]) -> Distribution<u32> {
    let mut w = weights.to_vec();
    if w.iter().all(|&v| v == 0) {
        w[0] = 1;
    }
    Distribution::from_weights(w.into_iter().enumerate().map(|(z, v)| (z as u32, int(i64::from(v))))).unwrap()
}

fn weights(m: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..12, 1usize << m)
}

/// A complete protocol tree of the given depth with random speakers and bit maps.
fn random_protocol(seed: u64, space: BlockSpace, depth: u32) -> ProtocolTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::new();
    fn build(rng: &mut ChaCha8Rng, nodes: &mut Vec<ProtocolNode>, space: BlockSpace, depth: u32, label: String) -> usize {
        let id = nodes.len();
        if depth == 0 {
            nodes.push(ProtocolNode::Leaf(label));
            return id;
        }
        nodes.push(ProtocolNode::Leaf(String::new()));
        let speaker = if rng.gen_bool(0.5) { Party::Alice } else { Party::Bob };
        let bit_map: Vec<bool> = space.points().map(|_| rng.gen_bool(0.5)).collect();
        let a = build(rng, nodes, space, depth - 1, format!("{label}0"));
        let b = build(rng, nodes, space, depth - 1, format!("{label}1"));
        nodes[id] = ProtocolNode::Internal { speaker, bit_map, children: [a, b] };
        id
    }
    build(&mut rng, &mut nodes, space, depth, String::new());
    ProtocolTree::new(space, nodes, 0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pow2_comparison_matches_floats(n in 1i64..10_000, d in 1i64..10_000, a in -40i64..40, q in 1i64..9) {
        let x = ratio(n, d);
        let e = ratio(a, q);
        let lhs = (n as f64 / d as f64).log2();
        let rhs = a as f64 / q as f64;
        if (lhs - rhs).abs() > 1e-9 {
            let want = if lhs < rhs { Ordering::Less } else { Ordering::Greater };
            prop_assert_eq!(cmp_pow2(&x, &e), want);
        }
    }

    #[test]
    fn fourier_round_trip(m in 1u32..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<u32> = (0..1u32 << m).map(|_| rng.gen_range(0..12)).collect();
        let d = dist_from(&w);
        let back = fourier_inversion(&fourier_transform(&d, m), m);
        for (z, p) in back.iter().enumerate() {
            prop_assert_eq!(p, &d.mass(&(z as u32)));
        }
        prop_assert!(fourier_bias_identity_holds(&d, m));
    }

    #[test]
    fn statistical_distance_is_a_metric(a in weights(3), b in weights(3)) {
        let (p, q) = (dist_from(&a), dist_from(&b));
        let d = p.statistical_distance(&q).unwrap();
        prop_assert_eq!(&d, &q.statistical_distance(&p).unwrap());
        prop_assert!(d >= Rational::from_integer(0.into()) && d <= Rational::from_integer(1.into()));
        prop_assert_eq!(p.statistical_distance(&p).unwrap(), int(0));
    }

    #[test]
    fn discrepancy_is_symmetric_under_transpose(seed in any::<u64>(), b in 1u32..=2) {
        let g = random_gadget(b, seed).unwrap();
        let d = discrepancy(&g).unwrap().value;
        prop_assert_eq!(&d, &discrepancy(&g.transpose()).unwrap().value);
        prop_assert!(d <= int(1));
        let px: Vec<u32> = (0..1u32 << b).rev().collect();
        prop_assert_eq!(&d, &discrepancy(&g.permuted(&px, &px)).unwrap().value);
    }

    #[test]
    fn density_machinery(n in 1u32..=3, b in 1u32..=2, seed in any::<u64>(), k in 0usize..3) {
        let delta = [ratio(1, 2), ratio(3, 4), int(1)][k].clone();
        let space = BlockSpace::new(n, b);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<u32> = space.points().map(|_| rng.gen_range(0..6)).collect();
        let x = BlockDist::new(space, dist_from(&w)).unwrap();
        let fix = density_restoring_fix(&x, &delta);
        prop_assert!(check_fix(&x, &delta, &fix));
        let part = density_restoring_partition(&x, &delta);
        prop_assert!(check_partition(&x, &part).all());
        // Density is monotone in δ.
        if is_dense(&x, &delta).is_dense() {
            prop_assert!(is_dense(&x, &ratio(1, 4)).is_dense());
        }
    }

    #[test]
    fn kraft_heavy_message_exists(seed in any::<u64>(), depth in 1u32..=5) {
        // Leaves of a random binary tree form a prefix-free code.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stack = vec![Vec::new()];
        let mut words = Vec::new();
        while let Some(w) = stack.pop() {
            if w.len() as u32 >= depth || rng.gen_bool(0.4) {
                words.push(w);
            } else {
                let mut a = w.clone();
                a.push(false);
                let mut c = w;
                c.push(true);
                stack.push(a);
                stack.push(c);
            }
        }
        let masses: Vec<(Vec<bool>, Rational)> = words.into_iter().map(|w| (w, int(rng.gen_range(0..9)))).collect();
        prop_assume!(masses.iter().any(|(_, m)| *m > int(0)));
        let d = Distribution::from_weights(masses).unwrap();
        let m = kraft_heavy_message(&d).unwrap();
        prop_assert_ne!(cmp_pow2(&d.mass(&m), &int(-(m.len() as i64))), Ordering::Less);
    }

    #[test]
    fn oracle_trees_solve(n in 1u32..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<u32> = (0..1u32 << n).map(|_| rng.gen_range(0..2)).collect();
        let s = SearchProblem::from_fn("random", n, |z| f[z as usize].to_string());
        let r = brute_force_ddt(&s).unwrap();
        prop_assert!(solves(&r.tree, &s).is_ok());
        prop_assert!(r.value <= n);
        prop_assert!((0..1u32 << n).all(|z| run_tree(&r.tree, z).queried.len() as u32 <= r.value));
        let g = Gadget::builtin("ip1").unwrap();
        let p = canonical_protocol(&r.tree, &g);
        let space = p.space();
        for x in space.points() {
            for y in space.points() {
                let z = g.lift(space, x, y);
                prop_assert_eq!(run_protocol(&p, x, y).output, run_tree(&r.tree, z).output);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deterministic_runs_certify(seed in any::<u64>(), depth in 1u32..=3, z in 0u32..4) {
        let g = Gadget::builtin("xor1").unwrap();
        let p = random_protocol(seed, BlockSpace::new(2, 1), depth);
        let params = LiftingParams::standard(Mode::Deterministic, 1, 2);
        let r = lift_deterministic(&p, &g, z, &params).unwrap();
        match &r.status {
            Status::Done => {
                let (x, y) = certify_transcript(&r, &p, &g, z).expect("completed runs certify");
                prop_assert_eq!(g.lift(p.space(), x, y), z);
            }
            Status::Violation { reason, .. } => prop_assert!(!r.trace.failed_hypotheses().is_empty(), "{}", reason),
            Status::ErrorHalt(_) => prop_assert!(false, "deterministic runs never halt"),
        }
        prop_assert_eq!(ledger_assertions(&r, &p, &g).mismatches(), 0);
    }

    #[test]
    fn k_halt_mass_is_below_two_to_minus_b(seed in any::<u64>(), depth in 1u32..=3, z in 0u32..4) {
        let g = Gadget::builtin("ip2").unwrap();
        let p = random_protocol(seed, BlockSpace::new(2, 2), depth);
        let params = LiftingParams::standard(Mode::Randomized, 2, 2);
        let t = enumerate_output_distribution(&p, &g, z, &params).unwrap();
        prop_assert!(t.k_halt < pow2(-2));
        let total: Rational = t.runs.iter().map(|(q, _)| q.clone()).sum();
        prop_assert_eq!(total, int(1));
        for (_, r) in &t.runs {
            prop_assert_eq!(ledger_assertions(r, &p, &g).mismatches(), 0);
        }
    }
}
