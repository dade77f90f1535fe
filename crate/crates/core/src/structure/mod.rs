//! Restrictions, density, structure certificates, and density-restoring
//! fixing and partitions.

mod danger;

pub use danger::*;

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::{One, Zero};

use crate::dist::{BlockDist, Distribution};
use crate::error::StructureError;
use crate::gadget::Gadget;
use crate::logcmp::{cmp_pow2, compare_prob_to_threshold};
use crate::rational::{int, pow2, Rational};
use crate::space::{BlockSpace, Coords};

/// Resolution of [`max_density`] brackets.
pub const DENSITY_RESOLUTION_BITS: i64 = 20;

/// A string in `{0,1,*}^n`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Restriction {
    pub cells: Vec<Option<bool>>,
}

impl Restriction {
    pub fn free_all(n: u32) -> Restriction {
        Restriction { cells: alloc::vec![None; n as usize] }
    }

    pub fn parse(s: &str) -> Result<Restriction, StructureError> {
        let cells = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(Some(false)),
                '1' => Ok(Some(true)),
                '*' => Ok(None),
                _ => Err(StructureError::Restriction(String::from(s))),
            })
            .collect::<Result<_, _>>()?;
        Ok(Restriction { cells })
    }

    pub fn n(&self) -> u32 {
        self.cells.len() as u32
    }

    pub fn free(&self) -> Coords {
        Coords::from_indices((0..self.n()).filter(|&i| self.cells[i as usize].is_none()))
    }

    pub fn fixed(&self) -> Coords {
        Coords::full(self.n()).minus(self.free())
    }

    /// Fix the coordinates of `coords` to the bits of `pattern` (first coordinate most significant).
    pub fn fix(&mut self, coords: Coords, pattern: u32) {
        let k = coords.len();
        for (j, i) in coords.iter().enumerate() {
            self.cells[i as usize] = Some(pattern >> (k - 1 - j as u32) & 1 == 1);
        }
    }

    /// The fixed bits on `coords` as a pattern (`None` if some coordinate is free).
    pub fn pattern(&self, coords: Coords) -> Option<u32> {
        coords.iter().try_fold(0u32, |acc, i| self.cells[i as usize].map(|b| (acc << 1) | u32::from(b)))
    }

    /// `z` agrees with the restriction on its fixed coordinates.
    pub fn consistent_with(&self, z: u32) -> bool {
        let n = self.n();
        self.cells.iter().enumerate().all(|(i, c)| c.map_or(true, |b| (z >> (n - 1 - i as u32) & 1 == 1) == b))
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cells {
            f.write_str(match c {
                Some(false) => "0",
                Some(true) => "1",
                None => "*",
            })?;
        }
        Ok(())
    }
}

/// Result of a density test: the first violating set, if any.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DensityWitness {
    pub delta: Rational,
    pub violating_set: Option<Coords>,
}

impl DensityWitness {
    pub fn is_dense(&self) -> bool {
        self.violating_set.is_none()
    }
}

fn violates(x: &BlockDist, i: Coords, delta: &Rational) -> bool {
    let q = delta * int(i64::from(x.space.b * i.len()));
    compare_prob_to_threshold(&x.project(i).max_prob(), &q) == Ordering::Greater
}

/// `H∞(X_I) >= δ·b·|I|` for every non-empty `I`; reports the first violation in canonical order.
pub fn is_dense(x: &BlockDist, delta: &Rational) -> DensityWitness {
    let violating_set = Coords::full(x.space.n).nonempty_subsets().into_iter().find(|&i| violates(x, i, delta));
    DensityWitness { delta: delta.clone(), violating_set }
}

/// Bracket `[lo, hi]` around `sup{δ : X is δ-dense}` (clamped to `[0, 1]`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DensityBracket {
    pub lo: Rational,
    pub hi: Rational,
}

pub fn max_density(x: &BlockDist) -> DensityBracket {
    max_density_with_resolution(x, DENSITY_RESOLUTION_BITS)
}

pub fn max_density_with_resolution(x: &BlockDist, bits: i64) -> DensityBracket {
    let one = Rational::one();
    if x.space.n == 0 || is_dense(x, &one).is_dense() {
        return DensityBracket { lo: one.clone(), hi: one };
    }
    let subsets = Coords::full(x.space.n).nonempty_subsets();
    let marginals: Vec<(u32, Rational)> = subsets.iter().map(|&i| (i.len(), x.project(i).max_prob())).collect();
    if marginals.iter().any(|(_, m)| m.is_one()) {
        return DensityBracket { lo: Rational::zero(), hi: Rational::zero() };
    }
    let b = x.space.b;
    let dense_at = |d: &Rational| {
        marginals.iter().all(|(k, m)| compare_prob_to_threshold(m, &(d * int(i64::from(b * k)))) != Ordering::Greater)
    };
    let (mut lo, mut hi) = (Rational::zero(), one);
    let width = pow2(-bits);
    while &hi - &lo > width {
        let mid = (&lo + &hi) / int(2);
        if dense_at(&mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DensityBracket { lo, hi }
}

/// Certificate that `(X, Y)` is `(ρ, τ)`-structured.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StructureCertificate {
    pub rho: Restriction,
    pub delta_x: Rational,
    pub delta_y: Rational,
    pub tau: Rational,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum StructureRefusal {
    /// Some supported pair violates `g^{fix}(x, y) = ρ_fix`.
    FixedBlockConsistency { x: u32, y: u32 },
    /// No witnessing densities reach `τ` (or one of them is 0).
    DensitySum { delta_x: DensityBracket, delta_y: DensityBracket },
}

impl StructureRefusal {
    pub fn clause(&self) -> &'static str {
        match self {
            StructureRefusal::FixedBlockConsistency { .. } => "fixed-block consistency",
            StructureRefusal::DensitySum { .. } => "density sum",
        }
    }
}

/// Free-coordinate marginal of a distribution on `Λ^n`.
pub fn free_marginal(d: &BlockDist, rho: &Restriction) -> BlockDist {
    d.project(rho.free())
}

pub fn is_structured(
    x: &BlockDist,
    y: &BlockDist,
    rho: &Restriction,
    tau: &Rational,
    g: &Gadget,
) -> Result<StructureCertificate, StructureRefusal> {
    let space = x.space;
    let fixed = rho.fixed();
    let want = rho.pattern(fixed).unwrap_or(0);
    for &a in x.dist.support() {
        for &b in y.dist.support() {
            if g.pattern(space, a, b, fixed) != want {
                return Err(StructureRefusal::FixedBlockConsistency { x: a, y: b });
            }
        }
    }
    let dx = max_density(&free_marginal(x, rho));
    let dy = max_density(&free_marginal(y, rho));
    if dx.lo.is_zero() || dy.lo.is_zero() || &(&dx.lo + &dy.lo) < tau {
        return Err(StructureRefusal::DensitySum { delta_x: dx, delta_y: dy });
    }
    Ok(StructureCertificate { rho: rho.clone(), delta_x: dx.lo, delta_y: dy.lo, tau: tau.clone() })
}

/// Re-verify a certificate from scratch.
pub fn verify_certificate(x: &BlockDist, y: &BlockDist, cert: &StructureCertificate, g: &Gadget) -> bool {
    let fixed = cert.rho.fixed();
    let want = cert.rho.pattern(fixed).unwrap_or(0);
    let consistent =
        x.dist.support().all(|&a| y.dist.support().all(|&b| g.pattern(x.space, a, b, fixed) == want));
    consistent
        && &cert.delta_x + &cert.delta_y >= cert.tau
        && is_dense(&free_marginal(x, &cert.rho), &cert.delta_x).is_dense()
        && is_dense(&free_marginal(y, &cert.rho), &cert.delta_y).is_dense()
}

/// Output of [`density_restoring_fix`]. Coordinates are those of the input space.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FixResult {
    pub fixed: Coords,
    /// The value `x_I` on `fixed` (a point of `Λ^|I|`).
    pub value: u32,
    /// `X_{[n]-I} | X_I = x_I`.
    pub conditioned: BlockDist,
}

/// Choose the violating set of maximum size (first in canonical order), fix it to its
/// heaviest value (smallest on ties), and return the conditioned remainder.
pub fn density_restoring_fix(x: &BlockDist, delta: &Rational) -> FixResult {
    let all = Coords::full(x.space.n);
    let chosen = all.nonempty_subsets().into_iter().filter(|&i| violates(x, i, delta)).fold(None, |best: Option<Coords>, i| {
        match best {
            Some(b) if b.len() >= i.len() => Some(b),
            _ => Some(i),
        }
    });
    match chosen {
        None => FixResult { fixed: Coords::EMPTY, value: 0, conditioned: x.clone() },
        Some(i) => {
            let marg = x.project(i);
            let value = *marg.dist.argmax();
            let space = x.space;
            let cond = x.condition(|p| space.project(p, i) == value).expect("heavy value has positive mass");
            FixResult { fixed: i, value, conditioned: cond.project(all.minus(i)) }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PartitionPart {
    /// Support points of `X` in this part, increasing.
    pub points: Vec<u32>,
    pub fixed: Coords,
    pub value: u32,
    /// Probability that `X` lands in this part or a later one.
    pub p_geq: Rational,
    pub mass: Rational,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DensityPartition {
    pub space: BlockSpace,
    pub delta: Rational,
    pub parts: Vec<PartitionPart>,
}

impl DensityPartition {
    /// Index of the part containing `x`.
    pub fn part_of(&self, x: u32) -> Option<usize> {
        self.parts.iter().position(|p| p.points.binary_search(&x).is_ok())
    }
}

/// Greedy fix-and-carve on the residual distribution until the support is exhausted.
pub fn density_restoring_partition(x: &BlockDist, delta: &Rational) -> DensityPartition {
    let space = x.space;
    let mut residual: Vec<u32> = x.dist.support().copied().collect();
    let mut parts = Vec::new();
    let mut p_geq = Rational::one();
    while !residual.is_empty() {
        let cond = x.condition(|p| residual.binary_search(&p).is_ok()).expect("residual has positive mass");
        let fix = density_restoring_fix(&cond, delta);
        let (points, rest): (Vec<u32>, Vec<u32>) =
            residual.iter().partition(|&&p| space.project(p, fix.fixed) == fix.value);
        let mass: Rational = points.iter().map(|p| x.dist.mass(p)).sum();
        parts.push(PartitionPart { points, fixed: fix.fixed, value: fix.value, p_geq: p_geq.clone(), mass: mass.clone() });
        p_geq -= mass;
        residual = rest;
    }
    DensityPartition { space, delta: delta.clone(), parts }
}

/// Outcome of re-checking the guarantees of a density-restoring partition.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PartitionCheck {
    pub cover_ok: bool,
    pub fixed_ok: bool,
    pub dense_ok: bool,
    pub entropy_ok: bool,
    pub p_geq_ok: bool,
}

impl PartitionCheck {
    pub fn all(&self) -> bool {
        self.cover_ok && self.fixed_ok && self.dense_ok && self.entropy_ok && self.p_geq_ok
    }
}

/// `maxprob(X_rest | part) · p_{>=j} <= maxprob(X) · 2^{δ·b·|I_j|}` and the other guarantees.
pub fn check_partition(x: &BlockDist, part: &DensityPartition) -> PartitionCheck {
    let space = x.space;
    let all = Coords::full(space.n);
    let mut seen: Vec<u32> = part.parts.iter().flat_map(|p| p.points.iter().copied()).collect();
    let total = seen.len();
    seen.sort_unstable();
    seen.dedup();
    let support: Vec<u32> = x.dist.support().copied().collect();
    let mut check = PartitionCheck { cover_ok: seen.len() == total && seen == support, ..PartitionCheck::default() };
    check.fixed_ok = part.parts.iter().all(|p| p.points.iter().all(|&pt| space.project(pt, p.fixed) == p.value));
    let mx = x.max_prob();
    let mut dense_ok = true;
    let mut entropy_ok = true;
    let mut p_geq_ok = part.parts.first().map_or(true, |p| p.p_geq.is_one());
    let mut remaining = Rational::one();
    for p in &part.parts {
        if p.p_geq != remaining || p.points.is_empty() {
            p_geq_ok = false;
        }
        remaining -= &p.mass;
        let Ok(cond) = x.condition(|pt| p.points.binary_search(&pt).is_ok()) else {
            dense_ok = false;
            continue;
        };
        let rest = cond.project(all.minus(p.fixed));
        if !is_dense(&rest, &part.delta).is_dense() {
            dense_ok = false;
        }
        let lhs = rest.max_prob() * &p.p_geq / &mx;
        let e = &part.delta * int(i64::from(space.b * p.fixed.len()));
        if cmp_pow2(&lhs, &e) == Ordering::Greater {
            entropy_ok = false;
        }
    }
    check.dense_ok = dense_ok;
    check.entropy_ok = entropy_ok;
    check.p_geq_ok = p_geq_ok && part.parts.windows(2).all(|w| w[1].p_geq < w[0].p_geq);
    check
}

/// Check the fixing postcondition: `X_I = x_I` is heavy and the remainder is δ-dense.
pub fn check_fix(x: &BlockDist, delta: &Rational, fix: &FixResult) -> bool {
    if fix.fixed.is_empty() {
        return is_dense(x, delta).is_dense() && fix.conditioned == *x;
    }
    let heavy = {
        let p = x.project(fix.fixed).dist.mass(&fix.value);
        let q = delta * int(i64::from(x.space.b * fix.fixed.len()));
        compare_prob_to_threshold(&p, &q) == Ordering::Greater
    };
    heavy && is_dense(&fix.conditioned, delta).is_dense()
}

/// `X` uniform over `points` of `space`.
pub fn flat(space: BlockSpace, points: &[u32]) -> BlockDist {
    BlockDist { space, dist: Distribution::uniform(points.iter().copied()).expect("non-empty support") }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn s21() -> BlockSpace {
        BlockSpace::new(2, 1)
    }

    #[test]
    fn density_examples() {
        let u = BlockDist::uniform(s21());
        assert!(is_dense(&u, &int(1)).is_dense());
        let c = flat(s21(), &[0b00, 0b01]);
        assert_eq!(is_dense(&c, &ratio(1, 8)).violating_set, Some(Coords::singleton(0)));
        let t = flat(s21(), &[0b00, 0b01, 0b10]);
        assert_eq!(is_dense(&t, &int(1)).violating_set, Some(Coords::singleton(0)));
    }

    #[test]
    fn max_density_examples() {
        assert_eq!(max_density(&BlockDist::uniform(s21())).lo, int(1));
        assert_eq!(max_density(&flat(s21(), &[3])).hi, int(0));
        let t = max_density(&flat(s21(), &[0b00, 0b01, 0b10]));
        // log2(3/2) = 0.58496...
        assert!(t.lo <= ratio(58497, 100000) && t.hi >= ratio(58496, 100000));
        assert!(&t.hi - &t.lo <= pow2(-20));
    }

    #[test]
    fn structured_examples() {
        let g = Gadget::builtin("xor1").unwrap();
        let u = BlockDist::uniform(s21());
        let c = is_structured(&u, &u, &Restriction::free_all(2), &int(2), &g).unwrap();
        assert_eq!((c.delta_x.clone(), c.delta_y.clone()), (int(1), int(1)));
        assert!(verify_certificate(&u, &u, &c, &g));
        let rho = Restriction::parse("1*").unwrap();
        assert_eq!(is_structured(&u, &u, &rho, &int(1), &g).unwrap_err().clause(), "fixed-block consistency");
        let t = flat(s21(), &[0b00, 0b01, 0b10]);
        assert_eq!(is_structured(&t, &t, &Restriction::free_all(2), &int(2), &g).unwrap_err().clause(), "density sum");
    }

    #[test]
    fn fix_examples() {
        let u = BlockDist::uniform(s21());
        assert_eq!(density_restoring_fix(&u, &int(1)).fixed, Coords::EMPTY);
        let c = flat(s21(), &[0b00, 0b01]);
        let f = density_restoring_fix(&c, &ratio(1, 2));
        assert!(f.fixed.contains(0));
        assert!(check_fix(&c, &ratio(1, 2), &f));
        let t = flat(s21(), &[0b00, 0b01, 0b10]);
        let f = density_restoring_fix(&t, &int(1));
        assert!(check_fix(&t, &int(1), &f));
    }

    #[test]
    fn partition_examples() {
        let u = BlockDist::uniform(s21());
        let p = density_restoring_partition(&u, &int(1));
        assert_eq!(p.parts.len(), 1);
        assert_eq!(p.parts[0].fixed, Coords::EMPTY);
        let pt = flat(s21(), &[2]);
        let p = density_restoring_partition(&pt, &int(1));
        assert_eq!(p.parts.len(), 1);
        assert_eq!(p.parts[0].fixed, Coords::full(2));
        let t = flat(s21(), &[0b00, 0b01, 0b10]);
        let p = density_restoring_partition(&t, &int(1));
        assert!(p.parts.len() > 1);
        assert!(check_partition(&t, &p).all());
    }

    #[test]
    fn restriction_roundtrip() {
        let r = Restriction::parse("0*1").unwrap();
        assert_eq!(r.to_string(), "0*1");
        assert_eq!(r.free(), Coords::singleton(1));
        assert!(r.consistent_with(0b001) && r.consistent_with(0b011) && !r.consistent_with(0b101));
        assert!(Restriction::parse("0x").is_err());
    }
}
