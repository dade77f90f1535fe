//! Block spaces `Λ^n` with `Λ = {0,1}^b`, coordinate sets, and bit vectors.
//!
//! A point of `Λ^n` is a `u32` whose most significant block is coordinate 1,
//! so integer order coincides with lexicographic order on block tuples.
//! Coordinates are 0-based internally and 1-based in user-facing text.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::ParseError;

/// Largest `n * b` supported by the `u32` point encoding.
pub const MAX_BITS: u32 = 24;

/// A set of coordinates in `[n]`, `n <= 32`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coords(pub u32);

impl Coords {
    pub const EMPTY: Coords = Coords(0);

    pub fn full(n: u32) -> Coords {
        if n >= 32 {
            Coords(u32::MAX)
        } else {
            Coords((1u32 << n) - 1)
        }
    }

    pub fn singleton(i: u32) -> Coords {
        Coords(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(it: I) -> Coords {
        Coords(it.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn contains(self, i: u32) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: Coords) -> Coords {
        Coords(self.0 | o.0)
    }

    pub fn intersect(self, o: Coords) -> Coords {
        Coords(self.0 & o.0)
    }

    pub fn minus(self, o: Coords) -> Coords {
        Coords(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Coords) -> bool {
        self.0 & !o.0 == 0
    }

    /// Indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        let mut m = self.0;
        core::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros();
                m &= m - 1;
                Some(i)
            }
        })
    }

    pub fn to_vec(self) -> Vec<u32> {
        self.iter().collect()
    }

    /// Position of coordinate `i` within this set (rank among members).
    pub fn rank(self, i: u32) -> u32 {
        (self.0 & ((1u32 << i) - 1)).count_ones()
    }

    /// Renumber `sub` (a subset of `self`) into local coordinates `0..self.len()`.
    pub fn localize(self, sub: Coords) -> Coords {
        Coords::from_indices(sub.iter().map(|i| self.rank(i)))
    }

    /// Inverse of [`Coords::localize`].
    pub fn globalize(self, local: Coords) -> Coords {
        let members = self.to_vec();
        Coords::from_indices(local.iter().map(|j| members[j as usize]))
    }

    /// All subsets of `self` in canonical order (size, then lexicographic).
    pub fn subsets(self) -> Vec<Coords> {
        let members = self.to_vec();
        let mut out: Vec<Coords> = (0u32..(1 << members.len()))
            .map(|m| Coords::from_indices((0..members.len() as u32).filter(|j| m >> j & 1 == 1).map(|j| members[j as usize])))
            .collect();
        out.sort();
        out
    }

    pub fn nonempty_subsets(self) -> Vec<Coords> {
        let mut v = self.subsets();
        v.remove(0);
        v
    }

    /// `{1,3}`-style rendering with 1-based indices.
    pub fn display(self) -> String {
        let parts: Vec<String> = self.iter().map(|i| alloc::format!("{}", i + 1)).collect();
        alloc::format!("{{{}}}", parts.join(","))
    }
}

/// Canonical order on `u32` bitmasks viewed as sets: smaller first, then lexicographic.
pub fn canonical_mask_cmp(a: u64, b: u64) -> Ordering {
    match a.count_ones().cmp(&b.count_ones()) {
        Ordering::Equal => {
            let d = a ^ b;
            if d == 0 {
                Ordering::Equal
            } else if a >> d.trailing_zeros() & 1 == 1 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
        o => o,
    }
}

impl Ord for Coords {
    fn cmp(&self, other: &Self) -> Ordering {
        canonical_mask_cmp(u64::from(self.0), u64::from(other.0))
    }
}

impl PartialOrd for Coords {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display())
    }
}

/// Geometry of `Λ^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockSpace {
    pub n: u32,
    pub b: u32,
}

impl BlockSpace {
    pub fn new(n: u32, b: u32) -> BlockSpace {
        assert!(b >= 1 && n * b <= MAX_BITS, "block space too large");
        BlockSpace { n, b }
    }

    pub fn size(self) -> u32 {
        1 << (self.n * self.b)
    }

    pub fn points(self) -> core::ops::Range<u32> {
        0..self.size()
    }

    pub fn block_mask(self) -> u32 {
        (1 << self.b) - 1
    }

    pub fn contains(self, x: u32) -> bool {
        self.n * self.b >= 32 || x < self.size()
    }

    /// Block `i` (0-based) of `x`.
    pub fn block(self, x: u32, i: u32) -> u32 {
        (x >> (self.b * (self.n - 1 - i))) & self.block_mask()
    }

    pub fn with_block(self, x: u32, i: u32, v: u32) -> u32 {
        let sh = self.b * (self.n - 1 - i);
        (x & !(self.block_mask() << sh)) | ((v & self.block_mask()) << sh)
    }

    /// Concatenation of the blocks in `coords`, in increasing coordinate order.
    pub fn project(self, x: u32, coords: Coords) -> u32 {
        coords.iter().fold(0, |acc, i| (acc << self.b) | self.block(x, i))
    }

    /// Write the blocks of `v` (a point of `Λ^coords`) into `x`.
    pub fn embed(self, x: u32, coords: Coords, v: u32) -> u32 {
        let k = coords.len();
        coords.iter().enumerate().fold(x, |acc, (j, i)| {
            let blk = (v >> (self.b * (k - 1 - j as u32))) & self.block_mask();
            self.with_block(acc, i, blk)
        })
    }

    /// The space `Λ^k` for `k = coords.len()`.
    pub fn sub(self, coords: Coords) -> BlockSpace {
        BlockSpace { n: coords.len(), b: self.b }
    }

    pub fn format_point(self, x: u32) -> String {
        format_bits(x, self.n * self.b)
    }
}

/// `len`-bit rendering, most significant first.
pub fn format_bits(x: u32, len: u32) -> String {
    (0..len).rev().map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Parse a `0/1` string (most significant first) into `(value, len)`.
pub fn parse_bits(s: &str) -> Result<(u32, u32), ParseError> {
    let s = s.trim();
    if s.len() > 32 || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(ParseError::Bits(String::from(s)));
    }
    let v = s.chars().fold(0u32, |acc, c| (acc << 1) | u32::from(c == '1'));
    Ok((v, s.len() as u32))
}

/// A short bit string, used for inputs such as `z ∈ {0,1}^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BitVector {
    pub bits: Vec<bool>,
}

impl BitVector {
    pub fn from_u32(v: u32, len: u32) -> BitVector {
        BitVector { bits: (0..len).rev().map(|i| v >> i & 1 == 1).collect() }
    }

    pub fn to_u32(&self) -> u32 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn parse(s: &str) -> Result<BitVector, ParseError> {
        let s = s.trim();
        if !s.chars().all(|c| c == '0' || c == '1') {
            return Err(ParseError::Bits(String::from(s)));
        }
        Ok(BitVector { bits: s.chars().map(|c| c == '1').collect() })
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_subset_order() {
        let subs = Coords::full(3).subsets();
        let shown: Vec<String> = subs.iter().map(|c| c.display()).collect();
        assert_eq!(shown, ["{}", "{1}", "{2}", "{3}", "{1,2}", "{1,3}", "{2,3}", "{1,2,3}"]);
    }

    #[test]
    fn project_embed_roundtrip() {
        let s = BlockSpace::new(3, 2);
        let x = 0b01_10_11;
        assert_eq!(s.block(x, 0), 0b01);
        assert_eq!(s.block(x, 2), 0b11);
        let c = Coords::from_indices([0, 2]);
        assert_eq!(s.project(x, c), 0b01_11);
        assert_eq!(s.embed(0, c, 0b01_11), 0b01_00_11);
        assert_eq!(s.embed(x, c, s.project(x, c)), x);
    }

    #[test]
    fn localize_globalize() {
        let f = Coords::from_indices([1, 3, 4]);
        let sub = Coords::from_indices([3, 4]);
        assert_eq!(f.localize(sub), Coords::from_indices([1, 2]));
        assert_eq!(f.globalize(f.localize(sub)), sub);
    }

    #[test]
    fn bits_parse() {
        assert_eq!(parse_bits("101").unwrap(), (5, 3));
        assert!(parse_bits("12").is_err());
        assert_eq!(BitVector::parse("011").unwrap().to_u32(), 3);
        assert_eq!(BitVector::from_u32(3, 3).to_string(), "011");
    }
}
