//! Search problems, parallel decision trees, and a brute-force optimal tree oracle.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::TreeError;
use crate::rational::Rational;
use crate::space::Coords;

/// Default limit on `n` for [`brute_force_ddt`].
pub const DEFAULT_DDT_BUDGET: u32 = 4;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TreeNode {
    Leaf(String),
    /// Query a set; `children` is indexed by the answer pattern (first coordinate most significant).
    Query { set: Coords, children: Vec<usize> },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParallelDecisionTree {
    n: u32,
    nodes: Vec<TreeNode>,
    root: usize,
}

impl ParallelDecisionTree {
    pub fn new(n: u32, nodes: Vec<TreeNode>, root: usize) -> Result<ParallelDecisionTree, TreeError> {
        if root >= nodes.len() {
            return Err(TreeError::MissingNode(root));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if seen[id] {
                return Err(TreeError::MissingNode(id));
            }
            seen[id] = true;
            if let TreeNode::Query { set, children } = &nodes[id] {
                if set.is_empty() {
                    return Err(TreeError::EmptyQuery);
                }
                if let Some(i) = set.iter().find(|&i| i >= n) {
                    return Err(TreeError::Coordinate(i + 1));
                }
                if children.len() != 1 << set.len() {
                    return Err(TreeError::MissingNode(id));
                }
                for &c in children {
                    if c >= nodes.len() {
                        return Err(TreeError::MissingNode(c));
                    }
                    stack.push(c);
                }
            }
        }
        Ok(ParallelDecisionTree { n, nodes, root })
    }

    pub fn leaf(n: u32, label: &str) -> ParallelDecisionTree {
        ParallelDecisionTree { n, nodes: vec![TreeNode::Leaf(String::from(label))], root: 0 }
    }

    /// A root querying `set` whose children are the given nodes (leaves, typically).
    pub fn query_then(n: u32, set: Coords, children: Vec<TreeNode>) -> ParallelDecisionTree {
        let k = children.len();
        let mut nodes = vec![TreeNode::Query { set, children: (1..=k).collect() }];
        nodes.extend(children);
        ParallelDecisionTree::new(n, nodes, 0).expect("well-formed")
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn child(&self, id: usize, answers: u32) -> usize {
        match &self.nodes[id] {
            TreeNode::Leaf(_) => id,
            TreeNode::Query { children, .. } => children[answers as usize],
        }
    }

    /// Max over leaves of the total number of queried coordinates on the path.
    pub fn query_complexity(&self) -> u32 {
        self.measure(self.root, &|set: Coords| set.len())
    }

    /// Max number of query nodes on a root-to-leaf path.
    pub fn depth(&self) -> u32 {
        self.measure(self.root, &|_| 1)
    }

    fn measure(&self, id: usize, cost: &dyn Fn(Coords) -> u32) -> u32 {
        match &self.nodes[id] {
            TreeNode::Leaf(_) => 0,
            TreeNode::Query { set, children } => cost(*set) + children.iter().map(|&c| self.measure(c, cost)).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TreeRun {
    pub output: String,
    /// Queried coordinates, in query order.
    pub queried: Vec<u32>,
    pub depth: u32,
}

/// Descend on `z` (`n` bits, coordinate 1 most significant).
pub fn run_tree(t: &ParallelDecisionTree, z: u32) -> TreeRun {
    let n = t.n;
    let mut cur = t.root;
    let mut queried = Vec::new();
    let mut depth = 0;
    loop {
        match &t.nodes[cur] {
            TreeNode::Leaf(o) => return TreeRun { output: o.clone(), queried, depth },
            TreeNode::Query { set, children } => {
                let ans = set.iter().fold(0u32, |acc, i| (acc << 1) | (z >> (n - 1 - i) & 1));
                queried.extend(set.iter());
                depth += 1;
                cur = children[ans as usize];
            }
        }
    }
}

/// A relation `S ⊆ {0,1}^n × O`, every row non-empty.
#[derive(Clone, PartialEq, Eq, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchProblem {
    pub name: String,
    pub n: u32,
    pub outputs: Vec<String>,
    /// `table[z]` lists allowed output indices (sorted, non-empty).
    pub table: Vec<Vec<usize>>,
}

impl SearchProblem {
    pub fn new(name: &str, n: u32, outputs: Vec<String>, mut table: Vec<Vec<usize>>) -> Result<SearchProblem, TreeError> {
        if n > 16 || table.len() != 1usize << n || table.iter().any(|r| r.is_empty() || r.iter().any(|&o| o >= outputs.len())) {
            return Err(TreeError::Relation(n));
        }
        for r in &mut table {
            r.sort_unstable();
            r.dedup();
        }
        Ok(SearchProblem { name: String::from(name), n, outputs, table })
    }

    /// A total function given by `f(z)` (an output label).
    pub fn from_fn<F: Fn(u32) -> String>(name: &str, n: u32, f: F) -> SearchProblem {
        let labels: Vec<String> = (0..1u32 << n).map(&f).collect();
        let mut outputs: Vec<String> = labels.clone();
        outputs.sort();
        outputs.dedup();
        let table = labels.iter().map(|l| vec![outputs.binary_search(l).expect("present")]).collect();
        SearchProblem { name: String::from(name), n, outputs, table }
    }

    pub fn allows(&self, z: u32, label: &str) -> bool {
        self.table[z as usize].iter().any(|&o| self.outputs[o] == label)
    }

    pub fn parity(n: u32) -> SearchProblem {
        SearchProblem::from_fn(&alloc::format!("parity{}", n), n, |z| alloc::format!("{}", z.count_ones() % 2))
    }

    /// Built-in relations: `parity<n>`, `const<n>`, `dictator<n>` (output `z_1`),
    /// `index2` (`z_{1+z_1}`), and `findone2` (some `i` with `z_i = 1`, or `none`).
    pub fn builtin(name: &str) -> Option<SearchProblem> {
        let num = |p: &str| name.strip_prefix(p).and_then(|r| r.parse::<u32>().ok()).filter(|&n| (1..=16).contains(&n));
        if let Some(n) = num("parity") {
            return Some(SearchProblem::parity(n));
        }
        if let Some(n) = num("const") {
            return Some(SearchProblem::from_fn(name, n, |_| String::from("0")));
        }
        if let Some(n) = num("dictator") {
            return Some(SearchProblem::from_fn(name, n, |z| alloc::format!("{}", z >> (n - 1) & 1)));
        }
        match name {
            // z_1 addresses coordinate 1 + z_1
            "index2" => Some(SearchProblem::from_fn(name, 2, |z| alloc::format!("{}", z >> (1 - (z >> 1)) & 1))),
            "findone2" => {
                let outputs = vec![String::from("1"), String::from("2"), String::from("none")];
                let table = (0..4u32)
                    .map(|z| {
                        let mut r = Vec::new();
                        if z & 0b10 != 0 {
                            r.push(0);
                        }
                        if z & 0b01 != 0 {
                            r.push(1);
                        }
                        if r.is_empty() {
                            r.push(2);
                        }
                        r
                    })
                    .collect();
                SearchProblem::new(name, 2, outputs, table).ok()
            }
            _ => None,
        }
    }
}

/// `Ok(())` or the first `z` on which the tree's output is not allowed.
pub fn solves(t: &ParallelDecisionTree, s: &SearchProblem) -> Result<(), u32> {
    if t.n != s.n {
        return Err(0);
    }
    match (0..1u32 << s.n).find(|&z| !s.allows(z, &run_tree(t, z).output)) {
        Some(z) => Err(z),
        None => Ok(()),
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RandomizedTree {
    components: Vec<(ParallelDecisionTree, Rational)>,
}

impl RandomizedTree {
    pub fn new(components: Vec<(ParallelDecisionTree, Rational)>) -> Result<RandomizedTree, TreeError> {
        let total: Rational = components.iter().map(|(_, w)| w.clone()).sum();
        if components.is_empty() || !total.is_one() || components.iter().any(|(_, w)| w <= &Rational::zero()) {
            return Err(TreeError::Weights);
        }
        Ok(RandomizedTree { components })
    }

    pub fn components(&self) -> &[(ParallelDecisionTree, Rational)] {
        &self.components
    }
}

/// `max_z Pr[T(z) ∉ S(z)]`.
pub fn randomized_error(rt: &RandomizedTree, s: &SearchProblem) -> Rational {
    (0..1u32 << s.n)
        .map(|z| {
            rt.components.iter().filter(|(t, _)| !s.allows(z, &run_tree(t, z).output)).map(|(_, w)| w.clone()).sum::<Rational>()
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DdtResult {
    pub value: u32,
    pub tree: ParallelDecisionTree,
}

pub fn brute_force_ddt(s: &SearchProblem) -> Result<DdtResult, TreeError> {
    brute_force_ddt_with_budget(s, DEFAULT_DDT_BUDGET)
}

/// Exact `D^dt(S)` over serial trees by memoized recursion on the set of
/// still-consistent inputs. Only coordinates that split the set are queried;
/// ties go to the smallest coordinate, leaves take the smallest common output.
pub fn brute_force_ddt_with_budget(s: &SearchProblem, budget: u32) -> Result<DdtResult, TreeError> {
    if s.n > budget || s.n > 6 {
        return Err(TreeError::Budget { n: s.n, budget: budget.min(6) });
    }
    let n = s.n;
    let full: u64 = if n == 6 { u64::MAX } else { (1u64 << (1 << n)) - 1 };
    let mut memo: BTreeMap<u64, (u32, Option<u32>)> = BTreeMap::new();
    let value = solve(s, full, &mut memo);
    let mut nodes = Vec::new();
    let root = emit(s, full, &memo, &mut nodes);
    let tree = ParallelDecisionTree::new(n, nodes, root).expect("well-formed");
    Ok(DdtResult { value, tree })
}

fn bit_mask(n: u32, i: u32, v: bool) -> u64 {
    (0..1u32 << n).filter(|z| (z >> (n - 1 - i) & 1 == 1) == v).fold(0, |m, z| m | 1 << z)
}

fn common_output(s: &SearchProblem, mask: u64) -> Option<usize> {
    let mut zs = (0..1u32 << s.n).filter(|&z| mask >> z & 1 == 1);
    let first = zs.next()?;
    let mut cand = s.table[first as usize].clone();
    for z in zs {
        cand.retain(|o| s.table[z as usize].contains(o));
    }
    cand.first().copied()
}

fn solve(s: &SearchProblem, mask: u64, memo: &mut BTreeMap<u64, (u32, Option<u32>)>) -> u32 {
    if let Some(&(v, _)) = memo.get(&mask) {
        return v;
    }
    let res = if common_output(s, mask).is_some() {
        (0, None)
    } else {
        let mut best: Option<(u32, u32)> = None;
        for i in 0..s.n {
            let m0 = mask & bit_mask(s.n, i, false);
            let m1 = mask & bit_mask(s.n, i, true);
            if m0 == 0 || m1 == 0 {
                continue;
            }
            let v = 1 + solve(s, m0, memo).max(solve(s, m1, memo));
            if best.map_or(true, |(bv, _)| v < bv) {
                best = Some((v, i));
            }
        }
        let (v, i) = best.expect("a non-singleton set without a common output has a splitting coordinate");
        (v, Some(i))
    };
    memo.insert(mask, res);
    res.0
}

fn emit(s: &SearchProblem, mask: u64, memo: &BTreeMap<u64, (u32, Option<u32>)>, nodes: &mut Vec<TreeNode>) -> usize {
    match memo[&mask].1 {
        None => {
            let o = common_output(s, mask).expect("leaf has a common output");
            nodes.push(TreeNode::Leaf(s.outputs[o].clone()));
            nodes.len() - 1
        }
        Some(i) => {
            let c0 = emit(s, mask & bit_mask(s.n, i, false), memo, nodes);
            let c1 = emit(s, mask & bit_mask(s.n, i, true), memo, nodes);
            nodes.push(TreeNode::Query { set: Coords::singleton(i), children: vec![c0, c1] });
            nodes.len() - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn leaf(s: &str) -> TreeNode {
        TreeNode::Leaf(String::from(s))
    }

    #[test]
    fn run_examples() {
        let t = ParallelDecisionTree::leaf(2, "o");
        assert_eq!(run_tree(&t, 3), TreeRun { output: "o".into(), queried: vec![], depth: 0 });
        let t = ParallelDecisionTree::query_then(2, Coords::full(2), vec![leaf("0"), leaf("1"), leaf("1"), leaf("0")]);
        assert_eq!(run_tree(&t, 0b10).output, "1");
        assert_eq!(run_tree(&t, 0b10).queried.len(), 2);
        assert_eq!(t.query_complexity(), 2);
        assert_eq!(t.depth(), 1);
        assert!(solves(&t, &SearchProblem::parity(2)).is_ok());
        assert_eq!(solves(&ParallelDecisionTree::leaf(2, "0"), &SearchProblem::parity(2)), Err(1));
    }

    #[test]
    fn randomized_error_examples() {
        let s = SearchProblem::from_fn("c", 1, |_| "a".into());
        let a = ParallelDecisionTree::leaf(1, "a");
        let b = ParallelDecisionTree::leaf(1, "b");
        assert_eq!(randomized_error(&RandomizedTree::new(vec![(a.clone(), Rational::one())]).unwrap(), &s), Rational::zero());
        let coin = RandomizedTree::new(vec![(a, ratio(1, 2)), (b.clone(), ratio(1, 2))]).unwrap();
        assert_eq!(randomized_error(&coin, &s), ratio(1, 2));
        let pad = SearchProblem::new("pad", 1, vec!["⊥".into()], vec![vec![0], vec![0]]).unwrap();
        assert_eq!(randomized_error(&RandomizedTree::new(vec![(b, Rational::one())]).unwrap(), &pad), Rational::one());
    }

    #[test]
    fn ddt_examples() {
        assert_eq!(brute_force_ddt(&SearchProblem::builtin("const2").unwrap()).unwrap().value, 0);
        let p3 = brute_force_ddt(&SearchProblem::parity(3)).unwrap();
        assert_eq!(p3.value, 3);
        assert!(solves(&p3.tree, &SearchProblem::parity(3)).is_ok());
        assert_eq!(brute_force_ddt(&SearchProblem::builtin("dictator3").unwrap()).unwrap().value, 1);
        assert_eq!(brute_force_ddt(&SearchProblem::builtin("index2").unwrap()).unwrap().value, 2);
        assert_eq!(brute_force_ddt(&SearchProblem::builtin("findone2").unwrap()).unwrap().value, 2);
        assert!(brute_force_ddt(&SearchProblem::parity(5)).is_err());
    }
}
