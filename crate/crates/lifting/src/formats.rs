//! JSON file formats for gadgets, protocols, search problems and trees.
//!
//! Rationals are written as `{"exact": "p/q", "approx": "..."}`; the decimal
//! is display-only. Readers also accept a bare `"p/q"` string.

use std::collections::BTreeMap;
use std::path::Path;

use lifting_core::dtree::{ParallelDecisionTree, SearchProblem, TreeNode};
use lifting_core::gadget::MAX_B;
use lifting_core::protocol::{Party, ProtocolNode, ProtocolTree, RandomizedProtocol};
use lifting_core::rational::{format_rational, parse_rational, to_decimal};
use lifting_core::space::{format_bits, parse_bits};
use lifting_core::{BlockSpace, Coords, Gadget, Rational};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Significant digits of every approximate decimal.
pub const APPROX_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("at {at}: {message}")]
    Invalid { at: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

fn invalid(at: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Invalid { at: at.into(), message: message.into() }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    Ok(serde_json::from_str(text)?)
}

/// An exact rational with an approximate decimal alongside.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rat(pub Rational);

impl Rat {
    pub fn approx(&self) -> String {
        to_decimal(&self.0, APPROX_DIGITS)
    }
}

impl From<Rational> for Rat {
    fn from(r: Rational) -> Self {
        Rat(r)
    }
}

impl From<&Rational> for Rat {
    fn from(r: &Rational) -> Self {
        Rat(r.clone())
    }
}

#[derive(Serialize)]
struct RatOut<'a> {
    exact: String,
    approx: &'a str,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RatIn {
    Plain(String),
    Full {
        exact: String,
        #[allow(dead_code)]
        approx: Option<String>,
    },
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RatOut { exact: format_rational(&self.0), approx: &self.approx() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = match RatIn::deserialize(d)? {
            RatIn::Plain(s) | RatIn::Full { exact: s, .. } => s,
        };
        parse_rational(&text).map(Rat).map_err(serde::de::Error::custom)
    }
}

/// `"p/q (approx decimal)"`, for tables.
pub fn show(r: &Rational) -> String {
    let exact = format_rational(r);
    let approx = to_decimal(r, APPROX_DIGITS);
    if exact == approx {
        exact
    } else {
        format!("{exact} (approx {approx})")
    }
}

// Gadgets.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetFile {
    pub b: u32,
    /// One row per `x`, each a bit string over `y`.
    pub rows: Vec<String>,
}

impl GadgetFile {
    pub fn from_gadget(g: &Gadget) -> GadgetFile {
        let rows = g.rows().iter().map(|r| r.iter().map(|&v| if v { '1' } else { '0' }).collect()).collect();
        GadgetFile { b: g.b(), rows }
    }

    pub fn to_gadget(&self) -> Result<Gadget, FormatError> {
        if self.b == 0 || self.b > MAX_B {
            return Err(invalid("b", format!("expected 1..={MAX_B}, got {}", self.b)));
        }
        let side = 1usize << self.b;
        if self.rows.len() != side {
            return Err(invalid("rows", format!("expected {side} rows, got {}", self.rows.len())));
        }
        let mut rows = Vec::with_capacity(side);
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != side {
                return Err(invalid(format!("rows[{i}]"), format!("expected {side} bits, got {}", r.len())));
            }
            rows.push(bits_of(r, &format!("rows[{i}]"))?);
        }
        Gadget::from_rows(self.b, &rows).map_err(|e| invalid("rows", e.to_string()))
    }
}

fn bits_of(s: &str, at: &str) -> Result<Vec<bool>, FormatError> {
    s.chars()
        .enumerate()
        .map(|(j, c)| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(invalid(format!("{at}[{j}]"), format!("expected 0 or 1, got {c:?}"))),
        })
        .collect()
}

pub fn parse_gadget(text: &str) -> Result<Gadget, FormatError> {
    from_json::<GadgetFile>(text)?.to_gadget()
}

/// A builtin name, or else a gadget file.
pub fn resolve_gadget(name_or_path: &str, base: &Path) -> Result<Gadget, FormatError> {
    if let Ok(g) = Gadget::builtin(name_or_path) {
        return Ok(g);
    }
    let path = base.join(name_or_path);
    if !path.exists() {
        return Err(invalid("gadget", format!("{name_or_path:?} is neither a builtin gadget nor a file")));
    }
    let g = parse_gadget(&read_text(&path)?).map_err(|e| in_file(&path, e))?;
    Ok(g.with_name(name_or_path))
}

fn in_file(path: &Path, e: FormatError) -> FormatError {
    match e {
        FormatError::Io { .. } => e,
        other => invalid(path.display().to_string(), other.to_string()),
    }
}

// Protocols.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Speaker {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeFile {
    Leaf {
        leaf: String,
    },
    Internal {
        speaker: Speaker,
        /// The bit sent for each input in lexicographic `Λ^n`.
        bit_map: Vec<u8>,
        children: Box<[NodeFile; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub n: u32,
    pub b: u32,
    pub tree: NodeFile,
}

fn node_file(p: &ProtocolTree, id: usize) -> NodeFile {
    match p.node(id) {
        ProtocolNode::Leaf(l) => NodeFile::Leaf { leaf: l.clone() },
        ProtocolNode::Internal { speaker, bit_map, children } => NodeFile::Internal {
            speaker: match speaker {
                Party::Alice => Speaker::A,
                Party::Bob => Speaker::B,
            },
            bit_map: bit_map.iter().map(|&v| u8::from(v)).collect(),
            children: Box::new([node_file(p, children[0]), node_file(p, children[1])]),
        },
    }
}

fn push_node(n: &NodeFile, at: String, out: &mut Vec<ProtocolNode>) -> Result<usize, FormatError> {
    let id = out.len();
    match n {
        NodeFile::Leaf { leaf } => out.push(ProtocolNode::Leaf(leaf.clone())),
        NodeFile::Internal { speaker, bit_map, children } => {
            out.push(ProtocolNode::Leaf(String::new()));
            let bits = bit_map
                .iter()
                .enumerate()
                .map(|(i, &v)| match v {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(invalid(format!("{at}.bit_map[{i}]"), format!("expected 0 or 1, got {v}"))),
                })
                .collect::<Result<Vec<bool>, _>>()?;
            let a = push_node(&children[0], format!("{at}.children[0]"), out)?;
            let b = push_node(&children[1], format!("{at}.children[1]"), out)?;
            let speaker = match speaker {
                Speaker::A => Party::Alice,
                Speaker::B => Party::Bob,
            };
            out[id] = ProtocolNode::Internal { speaker, bit_map: bits, children: [a, b] };
        }
    }
    Ok(id)
}

impl ProtocolFile {
    pub fn from_protocol(p: &ProtocolTree) -> ProtocolFile {
        let s = p.space();
        ProtocolFile { n: s.n, b: s.b, tree: node_file(p, p.root()) }
    }

    pub fn to_protocol(&self) -> Result<ProtocolTree, FormatError> {
        to_protocol(self.n, self.b, &self.tree, "tree")
    }
}

fn to_protocol(n: u32, b: u32, tree: &NodeFile, at: &str) -> Result<ProtocolTree, FormatError> {
    if b == 0 || n * b > 16 {
        return Err(invalid(at, format!("unsupported shape n = {n}, b = {b}")));
    }
    let mut nodes = Vec::new();
    push_node(tree, at.to_string(), &mut nodes)?;
    ProtocolTree::new(BlockSpace::new(n, b), nodes, 0).map_err(|e| invalid(at, e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub weight: Rat,
    pub tree: NodeFile,
}

/// A public-coin protocol: a weighted list of deterministic trees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomizedProtocolFile {
    pub n: u32,
    pub b: u32,
    pub components: Vec<ComponentFile>,
}

impl RandomizedProtocolFile {
    pub fn from_protocol(rp: &RandomizedProtocol) -> RandomizedProtocolFile {
        let s = rp.space();
        let components =
            rp.components().iter().map(|(p, w)| ComponentFile { weight: Rat(w.clone()), tree: node_file(p, p.root()) }).collect();
        RandomizedProtocolFile { n: s.n, b: s.b, components }
    }

    pub fn to_protocol(&self) -> Result<RandomizedProtocol, FormatError> {
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| Ok((to_protocol(self.n, self.b, &c.tree, &format!("components[{i}].tree"))?, c.weight.0.clone())))
            .collect::<Result<Vec<_>, FormatError>>()?;
        RandomizedProtocol::new(comps).map_err(|e| invalid("components", e.to_string()))
    }
}

/// Either protocol file; a deterministic one becomes a single component.
pub fn parse_any_protocol(text: &str) -> Result<RandomizedProtocol, FormatError> {
    let v: serde_json::Value = from_json(text)?;
    if v.get("components").is_some() {
        from_json::<RandomizedProtocolFile>(text)?.to_protocol()
    } else {
        Ok(RandomizedProtocol::deterministic(from_json::<ProtocolFile>(text)?.to_protocol()?))
    }
}

pub fn parse_protocol(text: &str) -> Result<ProtocolTree, FormatError> {
    from_json::<ProtocolFile>(text)?.to_protocol()
}

// Search problems.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: String,
    pub n: u32,
    pub outputs: Vec<String>,
    /// Allowed output indices for each `z`, keyed by its bit string.
    pub table: BTreeMap<String, Vec<usize>>,
}

impl ProblemFile {
    pub fn from_problem(s: &SearchProblem) -> ProblemFile {
        let table = s.table.iter().enumerate().map(|(z, r)| (format_bits(z as u32, s.n), r.clone())).collect();
        ProblemFile { name: s.name.clone(), n: s.n, outputs: s.outputs.clone(), table }
    }

    pub fn to_problem(&self) -> Result<SearchProblem, FormatError> {
        if self.n > 16 {
            return Err(invalid("n", format!("at most 16 coordinates, got {}", self.n)));
        }
        let size = 1usize << self.n;
        let mut table = vec![Vec::new(); size];
        for (k, r) in &self.table {
            let (z, len) = parse_bits(k).map_err(|e| invalid(format!("table.{k}"), e.to_string()))?;
            if len != self.n {
                return Err(invalid(format!("table.{k}"), format!("expected {} bits", self.n)));
            }
            if r.is_empty() {
                return Err(invalid(format!("table.{k}"), "empty output list"));
            }
            if let Some(o) = r.iter().find(|&&o| o >= self.outputs.len()) {
                return Err(invalid(format!("table.{k}"), format!("output index {o} out of range")));
            }
            table[z as usize] = r.clone();
        }
        if let Some(z) = table.iter().position(|r| r.is_empty()) {
            return Err(invalid("table", format!("missing row {}", format_bits(z as u32, self.n))));
        }
        SearchProblem::new(&self.name, self.n, self.outputs.clone(), table).map_err(|e| invalid("table", e.to_string()))
    }
}

pub fn parse_problem(text: &str) -> Result<SearchProblem, FormatError> {
    from_json::<ProblemFile>(text)?.to_problem()
}

/// A builtin name, or else a problem file.
pub fn resolve_problem(name_or_path: &str, base: &Path) -> Result<SearchProblem, FormatError> {
    if let Some(p) = SearchProblem::builtin(name_or_path) {
        return Ok(p);
    }
    let path = base.join(name_or_path);
    if !path.exists() {
        return Err(invalid("problem", format!("{name_or_path:?} is neither a builtin problem nor a file")));
    }
    let mut p = parse_problem(&read_text(&path)?).map_err(|e| in_file(&path, e))?;
    if p.name.is_empty() {
        p.name = name_or_path.to_string();
    }
    Ok(p)
}

// Parallel decision trees.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNodeFile {
    Leaf {
        leaf: String,
    },
    Query {
        /// 1-based coordinates.
        query: Vec<u32>,
        /// Indexed by the answer pattern, first queried coordinate most significant.
        children: Vec<TreeNodeFile>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub n: u32,
    pub tree: TreeNodeFile,
}

fn tree_node_file(t: &ParallelDecisionTree, id: usize) -> TreeNodeFile {
    match t.node(id) {
        TreeNode::Leaf(l) => TreeNodeFile::Leaf { leaf: l.clone() },
        TreeNode::Query { set, children } => TreeNodeFile::Query {
            query: set.iter().map(|i| i + 1).collect(),
            children: children.iter().map(|&c| tree_node_file(t, c)).collect(),
        },
    }
}

fn push_tree_node(n: &TreeNodeFile, at: String, out: &mut Vec<TreeNode>) -> Result<usize, FormatError> {
    let id = out.len();
    match n {
        TreeNodeFile::Leaf { leaf } => out.push(TreeNode::Leaf(leaf.clone())),
        TreeNodeFile::Query { query, children } => {
            if let Some(&i) = query.iter().find(|&&i| i == 0 || i > 32) {
                return Err(invalid(format!("{at}.query"), format!("coordinate {i} out of range")));
            }
            if query.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(format!("{at}.query"), "coordinates must be strictly increasing"));
            }
            out.push(TreeNode::Leaf(String::new()));
            let kids = children
                .iter()
                .enumerate()
                .map(|(k, c)| push_tree_node(c, format!("{at}.children[{k}]"), out))
                .collect::<Result<Vec<_>, _>>()?;
            out[id] = TreeNode::Query { set: Coords::from_indices(query.iter().map(|i| i - 1)), children: kids };
        }
    }
    Ok(id)
}

impl TreeFile {
    pub fn from_tree(t: &ParallelDecisionTree) -> TreeFile {
        TreeFile { n: t.n(), tree: tree_node_file(t, t.root()) }
    }

    pub fn to_tree(&self) -> Result<ParallelDecisionTree, FormatError> {
        let mut nodes = Vec::new();
        push_tree_node(&self.tree, String::from("tree"), &mut nodes)?;
        ParallelDecisionTree::new(self.n, nodes, 0).map_err(|e| invalid("tree", e.to_string()))
    }
}

pub fn parse_tree(text: &str) -> Result<ParallelDecisionTree, FormatError> {
    from_json::<TreeFile>(text)?.to_tree()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lifting_core::dtree::{brute_force_ddt, run_tree};
    use lifting_core::protocol::canonical_protocol;
    use lifting_core::rational::ratio;

    #[test]
    fn rationals_read_both_forms() {
        let r: Rat = from_json("\"3/8\"").unwrap();
        assert_eq!(r.0, ratio(3, 8));
        let text = to_json(&r);
        assert!(text.contains("\"approx\": \"0.375\""));
        assert_eq!(from_json::<Rat>(&text).unwrap(), r);
        assert!(from_json::<Rat>("\"1/0\"").is_err());
    }

    #[test]
    fn gadget_round_trip() {
        let g = Gadget::builtin("ip2").unwrap();
        let text = to_json(&GadgetFile::from_gadget(&g));
        assert_eq!(parse_gadget(&text).unwrap().rows(), g.rows());
    }

    #[test]
    fn gadget_errors_name_the_location() {
        let e = parse_gadget(r#"{"b": 1, "rows": ["01", "10", "11"]}"#).unwrap_err();
        assert_eq!(e.to_string(), "at rows: expected 2 rows, got 3");
        let e = parse_gadget(r#"{"b": 1, "rows": ["01", "1x"]}"#).unwrap_err();
        assert!(e.to_string().starts_with("at rows[1][1]"), "{e}");
        let e = parse_gadget("{\"b\": 1,\n \"rows\": [}").unwrap_err();
        assert!(matches!(e, FormatError::Json { line: 2, .. }), "{e}");
    }

    #[test]
    fn protocol_and_tree_round_trip() {
        let s = SearchProblem::builtin("index2").unwrap();
        let t = brute_force_ddt(&s).unwrap().tree;
        let tf = TreeFile::from_tree(&t);
        let back = parse_tree(&to_json(&tf)).unwrap();
        assert_eq!(TreeFile::from_tree(&back), tf);
        assert!((0..4u32).all(|z| run_tree(&back, z) == run_tree(&t, z)));
        let p = canonical_protocol(&t, &Gadget::builtin("ip1").unwrap());
        let text = to_json(&ProtocolFile::from_protocol(&p));
        let back = parse_protocol(&text).unwrap();
        assert_eq!(to_json(&ProtocolFile::from_protocol(&back)), text);
        let rp = RandomizedProtocol::new(vec![(p.clone(), ratio(1, 3)), (ProtocolTree::leaf(p.space(), "0"), ratio(2, 3))]).unwrap();
        let text = to_json(&RandomizedProtocolFile::from_protocol(&rp));
        assert_eq!(parse_any_protocol(&text).unwrap().components().len(), 2);
        assert_eq!(parse_any_protocol(&to_json(&ProtocolFile::from_protocol(&p))).unwrap().components().len(), 1);
    }

    #[test]
    fn problem_round_trip_and_errors() {
        let s = SearchProblem::builtin("findone2").unwrap();
        let text = to_json(&ProblemFile::from_problem(&s));
        assert_eq!(parse_problem(&text).unwrap(), s);
        let e = parse_problem(r#"{"n": 1, "outputs": ["a"], "table": {"0": [0]}}"#).unwrap_err();
        assert!(e.to_string().contains("missing row 1"), "{e}");
        let e = parse_problem(r#"{"n": 1, "outputs": ["a"], "table": {"0": [0], "1": [3]}}"#).unwrap_err();
        assert!(e.to_string().contains("out of range"), "{e}");
    }
}
