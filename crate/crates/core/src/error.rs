use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("not a rational number: {0:?}")]
    Rational(String),
    #[error("not a bit string: {0:?}")]
    Bits(String),
    #[error("unknown gadget name: {0:?}")]
    GadgetName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("masses must be non-negative and sum to 1 (sum is {0})")]
    NotNormalized(String),
    #[error("empty domain")]
    EmptyDomain,
    #[error("conditioning on an event of probability zero")]
    NullEvent,
    #[error("distributions live on different domains")]
    DomainMismatch,
    #[error("value is outside the block space")]
    OutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("truth table must be {expected} x {expected}, got {rows} rows of length {cols}")]
    Shape { expected: usize, rows: usize, cols: usize },
    #[error("side length must be between 1 and {max} bits, got {got}")]
    SideBits { got: u32, max: u32 },
    #[error("input has {got} bits, expected {expected}")]
    InputLength { got: usize, expected: usize },
    #[error("exhaustive search needs side size {side} <= budget {budget}")]
    Budget { side: u64, budget: u64 },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("message support is not prefix-free: {0:?} is a prefix of {1:?}")]
    NotPrefixFree(String, String),
    #[error("empty message distribution")]
    Empty,
    #[error("bit map has length {got}, expected {expected}")]
    BitMapLength { got: usize, expected: usize },
    #[error("node {0} does not exist")]
    MissingNode(usize),
    #[error("protocol is not a tree rooted at node 0")]
    Shape,
    #[error("randomized protocol weights must be positive and sum to 1")]
    Weights,
    #[error("no input pair maps to the requested z")]
    EmptyFiber,
    #[error("enumeration exceeded {0} branches")]
    Budget(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("query coordinate {0} is outside 1..=n")]
    Coordinate(u32),
    #[error("node {0} does not exist")]
    MissingNode(usize),
    #[error("query set must be non-empty")]
    EmptyQuery,
    #[error("relation table must have one non-empty row for each of the 2^{0} inputs")]
    Relation(u32),
    #[error("exhaustive search supports n <= {budget}, got {n}")]
    Budget { n: u32, budget: u32 },
    #[error("tree weights must be positive and sum to 1")]
    Weights,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("parameter out of range: {0}")]
    Params(String),
    #[error("instance exceeds budget: {0}")]
    Budget(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("exhaustive scan supports |F| <= {max_free} and b <= {max_b}, got |F| = {free}, b = {b}")]
    Budget { free: u32, b: u32, max_free: u32, max_b: u32 },
    #[error("restriction must be a string over {{0,1,*}}, got {0:?}")]
    Restriction(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("no supported pair lies in the fiber of z")]
    EmptyFiber,
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
