//! Bit-granular two-party protocols over `Λ^n × Λ^n`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Shl};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::dist::Distribution;
use crate::dtree::{ParallelDecisionTree, TreeNode};
use crate::error::ProtocolError;
use crate::gadget::{BooleanGadget, Gadget};
use crate::rational::{to_common_integers, Rational};
use crate::space::BlockSpace;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Party::Alice => 'A',
            Party::Bob => 'B',
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProtocolNode {
    Leaf(String),
    Internal {
        speaker: Party,
        /// The bit sent, indexed by the speaker's input in `Λ^n`.
        bit_map: Vec<bool>,
        children: [usize; 2],
    },
}

/// A protocol tree stored as an arena; `root` indexes `nodes`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProtocolTree {
    space: BlockSpace,
    nodes: Vec<ProtocolNode>,
    root: usize,
}

impl ProtocolTree {
    /// Validates bit-map lengths and that the nodes reachable from `root` form a tree.
    pub fn new(space: BlockSpace, nodes: Vec<ProtocolNode>, root: usize) -> Result<ProtocolTree, ProtocolError> {
        if root >= nodes.len() {
            return Err(ProtocolError::MissingNode(root));
        }
        let size = space.size() as usize;
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if seen[id] {
                return Err(ProtocolError::Shape);
            }
            seen[id] = true;
            if let ProtocolNode::Internal { bit_map, children, .. } = &nodes[id] {
                if bit_map.len() != size {
                    return Err(ProtocolError::BitMapLength { got: bit_map.len(), expected: size });
                }
                for &c in children {
                    if c >= nodes.len() {
                        return Err(ProtocolError::MissingNode(c));
                    }
                    stack.push(c);
                }
            }
        }
        Ok(ProtocolTree { space, nodes, root })
    }

    pub fn leaf(space: BlockSpace, label: &str) -> ProtocolTree {
        ProtocolTree { space, nodes: vec![ProtocolNode::Leaf(String::from(label))], root: 0 }
    }

    pub fn space(&self) -> BlockSpace {
        self.space
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &ProtocolNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[ProtocolNode] {
        &self.nodes
    }

    pub fn speaker(&self, id: usize) -> Option<Party> {
        match &self.nodes[id] {
            ProtocolNode::Leaf(_) => None,
            ProtocolNode::Internal { speaker, .. } => Some(*speaker),
        }
    }

    /// Child reached by the given bit.
    pub fn child(&self, id: usize, bit: bool) -> usize {
        match &self.nodes[id] {
            ProtocolNode::Leaf(_) => id,
            ProtocolNode::Internal { children, .. } => children[usize::from(bit)],
        }
    }

    /// The bit the speaker at `id` sends on input `input`.
    pub fn bit(&self, id: usize, input: u32) -> bool {
        match &self.nodes[id] {
            ProtocolNode::Leaf(_) => false,
            ProtocolNode::Internal { bit_map, .. } => bit_map[input as usize],
        }
    }

    /// Follow `bits` from `from`.
    pub fn follow(&self, from: usize, bits: &[bool]) -> usize {
        bits.iter().fold(from, |id, &b| self.child(id, b))
    }

    /// The maximal same-speaker message sent from `id` by a speaker holding `input`,
    /// and the node where it ends.
    pub fn message_from(&self, id: usize, input: u32) -> (Vec<bool>, usize) {
        let Some(speaker) = self.speaker(id) else {
            return (Vec::new(), id);
        };
        let mut cur = id;
        let mut bits = Vec::new();
        while self.speaker(cur) == Some(speaker) {
            let b = self.bit(cur, input);
            bits.push(b);
            cur = self.child(cur, b);
        }
        (bits, cur)
    }

    /// Leaves reachable from `id`, with their depth below `id`.
    fn leaf_paths(&self, id: usize, out: &mut Vec<(usize, Vec<Party>)>, path: &mut Vec<Party>) {
        match &self.nodes[id] {
            ProtocolNode::Leaf(_) => out.push((id, path.clone())),
            ProtocolNode::Internal { speaker, children, .. } => {
                for &c in children {
                    path.push(*speaker);
                    self.leaf_paths(c, out, path);
                    path.pop();
                }
            }
        }
    }
}

/// Bits sent so far, with the indices where the speaker changed.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transcript {
    pub bits: Vec<bool>,
    pub round_boundaries: Vec<usize>,
}

impl Transcript {
    /// Append a round's bits (a new round starts unless the transcript is empty).
    pub fn push_round(&mut self, bits: &[bool]) {
        if bits.is_empty() {
            return;
        }
        if !self.bits.is_empty() {
            self.round_boundaries.push(self.bits.len());
        }
        self.bits.extend_from_slice(bits);
    }

    pub fn rounds(&self) -> usize {
        if self.bits.is_empty() {
            0
        } else {
            self.round_boundaries.len() + 1
        }
    }

    pub fn bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.bits.iter().enumerate() {
            if self.round_boundaries.contains(&i) {
                f.write_str("|")?;
            }
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProtocolRun {
    pub transcript: Transcript,
    pub output: String,
    pub leaf: usize,
}

pub fn run_protocol(p: &ProtocolTree, x: u32, y: u32) -> ProtocolRun {
    let mut transcript = Transcript::default();
    let mut cur = p.root;
    while let Some(speaker) = p.speaker(cur) {
        let input = if speaker == Party::Alice { x } else { y };
        let (bits, next) = p.message_from(cur, input);
        transcript.push_round(&bits);
        cur = next;
    }
    let ProtocolNode::Leaf(output) = &p.nodes[cur] else { unreachable!() };
    ProtocolRun { transcript, output: output.clone(), leaf: cur }
}

/// Distribution of the round message sent from `node` when the speaker's input is drawn from `x`.
pub fn message_distribution(p: &ProtocolTree, node: usize, x: &Distribution<u32>) -> Result<Distribution<Vec<bool>>, ProtocolError> {
    let support: Vec<(u32, Rational)> = x.iter().filter(|(_, m)| !m.is_zero()).map(|(&v, m)| (v, m.clone())).collect();
    if support.is_empty() {
        return Err(ProtocolError::Empty);
    }
    let mut masses: BTreeMap<Vec<bool>, Rational> = BTreeMap::new();
    for (v, m) in support {
        let (msg, _) = p.message_from(node, v);
        *masses.entry(msg).or_insert_with(Rational::zero) += m;
    }
    let words: Vec<&Vec<bool>> = masses.keys().collect();
    check_prefix_free(&words)?;
    Distribution::new(masses).map_err(|_| ProtocolError::Empty)
}

fn bits_str(b: &[bool]) -> String {
    b.iter().map(|&v| if v { '1' } else { '0' }).collect()
}

pub fn check_prefix_free<W: AsRef<[bool]>>(words: &[W]) -> Result<(), ProtocolError> {
    for (i, a) in words.iter().enumerate() {
        for (j, b) in words.iter().enumerate() {
            let (a, b) = (a.as_ref(), b.as_ref());
            if i != j && a.len() <= b.len() && b.starts_with(a) {
                return Err(ProtocolError::NotPrefixFree(bits_str(a), bits_str(b)));
            }
        }
    }
    Ok(())
}

/// Canonical message order: shorter first, then lexicographic.
pub fn canonical_message_cmp(a: &[bool], b: &[bool]) -> core::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// First index `k` (in the given order) with `weights[k]·2^{lens[k]} >= total`,
/// i.e. `Pr[w_k] >= 2^{-|w_k|}`. The words are assumed prefix-free; then such
/// an index always exists.
pub fn kraft_heavy_index<W>(lens: &[u32], weights: &[W]) -> Option<usize>
where
    W: Clone + Ord + Zero + Add<Output = W> + Shl<u32, Output = W>,
{
    let total = weights.iter().cloned().fold(W::zero(), |a, b| a + b);
    (0..lens.len()).find(|&k| !weights[k].is_zero() && weights[k].clone() << lens[k] >= total)
}

/// A message `w` in the support with `Pr[w] >= 2^{-|w|}`, first in canonical order.
pub fn kraft_heavy_message(d: &Distribution<Vec<bool>>) -> Result<Vec<bool>, ProtocolError> {
    let mut words: Vec<(&Vec<bool>, &Rational)> = d.iter().filter(|(_, m)| !m.is_zero()).collect();
    if words.is_empty() {
        return Err(ProtocolError::Empty);
    }
    let ws: Vec<&Vec<bool>> = words.iter().map(|(w, _)| *w).collect();
    check_prefix_free(&ws)?;
    words.sort_by(|a, b| canonical_message_cmp(a.0, b.0));
    let masses: Vec<Rational> = words.iter().map(|(_, m)| (*m).clone()).collect();
    let (nums, _) = to_common_integers(&masses);
    let lens: Vec<u32> = words.iter().map(|(w, _)| w.len() as u32).collect();
    let k = kraft_heavy_index::<BigUint>(&lens, &nums).ok_or(ProtocolError::Empty)?;
    Ok(words[k].0.clone())
}

/// Communication complexity `C` (max leaf depth) and rounds `r` (max number of
/// same-speaker segments on a root-to-leaf path).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Complexity {
    pub c: u32,
    pub r: u32,
}

pub fn complexity(p: &ProtocolTree) -> Complexity {
    let mut leaves = Vec::new();
    p.leaf_paths(p.root, &mut leaves, &mut Vec::new());
    let mut c = 0;
    let mut r = 0;
    for (_, path) in leaves {
        c = c.max(path.len() as u32);
        let segs = path.iter().enumerate().filter(|(i, s)| *i == 0 || path[i - 1] != **s).count() as u32;
        r = r.max(segs);
    }
    Complexity { c, r }
}

struct Builder<'a> {
    space: BlockSpace,
    g: &'a Gadget,
    tree: &'a ParallelDecisionTree,
    nodes: Vec<ProtocolNode>,
}

impl Builder<'_> {
    fn push(&mut self, n: ProtocolNode) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn tree_node(&mut self, t: usize) -> usize {
        match self.tree.node(t) {
            TreeNode::Leaf(label) => {
                let label = label.clone();
                self.push(ProtocolNode::Leaf(label))
            }
            TreeNode::Query { set, .. } => {
                let queries = set.to_vec();
                self.query(t, &queries, 0, 0)
            }
        }
    }

    /// Ask `queries[k..]`; `answers` holds the bits for `queries[..k]`.
    fn query(&mut self, t: usize, queries: &[u32], k: usize, answers: u32) -> usize {
        if k == queries.len() {
            let child = self.tree.child(t, answers);
            return self.tree_node(child);
        }
        self.alice(t, queries, k, answers, 0, 0)
    }

    fn alice(&mut self, t: usize, queries: &[u32], k: usize, answers: u32, sent: u32, prefix: u32) -> usize {
        let b = self.space.b;
        if sent == b {
            return self.bob(t, queries, k, answers, prefix);
        }
        let i = queries[k];
        let space = self.space;
        let bit_map = space.points().map(|x| space.block(x, i) >> (b - 1 - sent) & 1 == 1).collect();
        let c0 = self.alice(t, queries, k, answers, sent + 1, prefix << 1);
        let c1 = self.alice(t, queries, k, answers, sent + 1, (prefix << 1) | 1);
        self.push(ProtocolNode::Internal { speaker: Party::Alice, bit_map, children: [c0, c1] })
    }

    fn bob(&mut self, t: usize, queries: &[u32], k: usize, answers: u32, xi: u32) -> usize {
        let i = queries[k];
        let space = self.space;
        let bit_map = space.points().map(|y| self.g.value(xi, space.block(y, i))).collect();
        let c0 = self.query(t, queries, k + 1, answers << 1);
        let c1 = self.query(t, queries, k + 1, (answers << 1) | 1);
        self.push(ProtocolNode::Internal { speaker: Party::Bob, bit_map, children: [c0, c1] })
    }
}

/// The natural protocol for `S ∘ g^n`: for each queried coordinate `i` (in increasing
/// order within a query set) Alice sends `x_i` most significant bit first and Bob
/// answers `g(x_i, y_i)`.
pub fn canonical_protocol(t: &ParallelDecisionTree, g: &Gadget) -> ProtocolTree {
    let space = BlockSpace::new(t.n(), g.b());
    let mut b = Builder { space, g, tree: t, nodes: Vec::new() };
    let root = b.tree_node(t.root());
    ProtocolTree { space, nodes: b.nodes, root }
}

/// A public-coin protocol: a distribution over deterministic protocols.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RandomizedProtocol {
    components: Vec<(ProtocolTree, Rational)>,
}

impl RandomizedProtocol {
    pub fn new(components: Vec<(ProtocolTree, Rational)>) -> Result<RandomizedProtocol, ProtocolError> {
        let total: Rational = components.iter().map(|(_, w)| w.clone()).sum();
        if components.is_empty()
            || !total.is_one()
            || components.iter().any(|(_, w)| w <= &Rational::zero())
            || components.iter().any(|(p, _)| p.space != components[0].0.space)
        {
            return Err(ProtocolError::Weights);
        }
        Ok(RandomizedProtocol { components })
    }

    pub fn deterministic(p: ProtocolTree) -> RandomizedProtocol {
        RandomizedProtocol { components: vec![(p, Rational::one())] }
    }

    pub fn components(&self) -> &[(ProtocolTree, Rational)] {
        &self.components
    }

    pub fn space(&self) -> BlockSpace {
        self.components[0].0.space
    }

    /// Output distribution on `(x, y)`.
    pub fn run(&self, x: u32, y: u32) -> Distribution<String> {
        let mut m: BTreeMap<String, Rational> = BTreeMap::new();
        for (p, w) in &self.components {
            *m.entry(run_protocol(p, x, y).output).or_insert_with(Rational::zero) += w;
        }
        Distribution::new(m).expect("weights sum to 1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::space::Coords;

    fn msg(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn kraft_examples() {
        let d = Distribution::point(msg("101"));
        assert_eq!(kraft_heavy_message(&d).unwrap(), msg("101"));
        let d = Distribution::new([(msg("0"), ratio(1, 2)), (msg("10"), ratio(1, 4)), (msg("11"), ratio(1, 4))]).unwrap();
        assert_eq!(kraft_heavy_message(&d).unwrap(), msg("0"));
        let d = Distribution::new([(msg("0"), ratio(1, 8)), (msg("10"), ratio(7, 16)), (msg("11"), ratio(7, 16))]).unwrap();
        assert_eq!(kraft_heavy_message(&d).unwrap(), msg("10"));
        let d = Distribution::new([(msg("0"), ratio(1, 2)), (msg("01"), ratio(1, 2))]).unwrap();
        assert!(matches!(kraft_heavy_message(&d), Err(ProtocolError::NotPrefixFree(..))));
    }

    fn alice_sends_first_bit(space: BlockSpace) -> ProtocolTree {
        let bit_map = space.points().map(|x| x >> (space.n * space.b - 1) & 1 == 1).collect();
        ProtocolTree::new(
            space,
            vec![
                ProtocolNode::Internal { speaker: Party::Alice, bit_map, children: [1, 2] },
                ProtocolNode::Leaf("zero".into()),
                ProtocolNode::Leaf("one".into()),
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn run_examples() {
        let s = BlockSpace::new(2, 1);
        let leaf = ProtocolTree::leaf(s, "o");
        let r = run_protocol(&leaf, 0, 0);
        assert!(r.transcript.bits.is_empty());
        assert_eq!(r.output, "o");
        assert_eq!(complexity(&leaf), Complexity { c: 0, r: 0 });
        let p = alice_sends_first_bit(s);
        assert_eq!(run_protocol(&p, 0b10, 0).transcript.bits, vec![true]);
        assert_eq!(complexity(&p), Complexity { c: 1, r: 1 });
    }

    #[test]
    fn message_distribution_counts() {
        // Two-bit Alice round over n=2, b=1: messages 0, 10, 11, 10 for x = 00, 01, 10, 11.
        let s = BlockSpace::new(2, 1);
        let first = vec![false, true, true, true];
        let second = vec![false, false, true, false];
        let p = ProtocolTree::new(
            s,
            vec![
                ProtocolNode::Internal { speaker: Party::Alice, bit_map: first, children: [1, 2] },
                ProtocolNode::Leaf("a".into()),
                ProtocolNode::Internal { speaker: Party::Alice, bit_map: second, children: [3, 4] },
                ProtocolNode::Leaf("b".into()),
                ProtocolNode::Leaf("c".into()),
            ],
            0,
        )
        .unwrap();
        let d = message_distribution(&p, 0, &Distribution::uniform(0u32..4).unwrap()).unwrap();
        assert_eq!(d.mass(&msg("0")), ratio(1, 4));
        assert_eq!(d.mass(&msg("10")), ratio(1, 2));
        assert_eq!(d.mass(&msg("11")), ratio(1, 4));
        let one = message_distribution(&p, 0, &Distribution::uniform([1u32, 2]).unwrap()).unwrap();
        assert_eq!(one.len(), 2);
    }

    #[test]
    fn canonical_one_query() {
        let t = ParallelDecisionTree::query_then(1, Coords::singleton(0), vec![TreeNode::Leaf("0".into()), TreeNode::Leaf("1".into())]);
        let g = Gadget::builtin("and1").unwrap();
        let p = canonical_protocol(&t, &g);
        assert_eq!(complexity(&p), Complexity { c: 2, r: 2 });
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(run_protocol(&p, x, y).output, if x & y == 1 { "1" } else { "0" });
            }
        }
        let z = ParallelDecisionTree::leaf(1, "o");
        assert_eq!(complexity(&canonical_protocol(&z, &g)), Complexity { c: 0, r: 0 });
    }
}
