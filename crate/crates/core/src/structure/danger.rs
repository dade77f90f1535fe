//! Leaking, sparsifying, skewing and biasing values.
//!
//! Values `x` and the distribution `Y` live on `Λ^F` for the free set `F`,
//! renumbered to local coordinates `0..|F|`. Every test involving the
//! quantity `e_{y_J}` (defined by `Pr[Y_J = y_J] = 2^{-δ_Y·b·|J| - e}`) is
//! rewritten through that definition, so no logarithm is ever evaluated.

use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{is_dense, DensityWitness};
use crate::dist::{BlockDist, Distribution};
use crate::error::StructureError;
use crate::gadget::Gadget;
use crate::logcmp::{compare_prob_to_threshold, LogForm};
use crate::rational::{int, pow2, Rational};
use crate::space::Coords;

/// Size limits for exhaustive classification scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanBudget {
    pub max_free: u32,
    pub max_b: u32,
}

impl Default for ScanBudget {
    fn default() -> Self {
        ScanBudget { max_free: 3, max_b: 2 }
    }
}

impl ScanBudget {
    pub fn check(&self, y: &BlockDist) -> Result<(), StructureError> {
        let (free, b) = (y.space.n, y.space.b);
        if free > self.max_free || b > self.max_b {
            return Err(StructureError::Budget { free, b, max_free: self.max_free, max_b: self.max_b });
        }
        Ok(())
    }
}

/// Distribution of the pattern `g^I(x_I, Y_I)` over `{0,1}^|I|`, zeros included.
pub fn pattern_distribution(x: u32, y: &BlockDist, g: &Gadget, i: Coords) -> Distribution<u32> {
    let space = y.space;
    let mut masses: Vec<Rational> = (0..1u32 << i.len()).map(|_| Rational::zero()).collect();
    for (&v, p) in y.dist.iter() {
        masses[g.pattern(space, x, v, i) as usize] += p;
    }
    Distribution::new(masses.into_iter().enumerate().map(|(z, p)| (z as u32, p))).expect("pattern masses sum to 1")
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LeakWitness {
    pub set: Coords,
    pub pattern: u32,
    pub prob: Rational,
}

/// Some `I ≠ ∅`, `z_I` with `Pr[g^I(x_I, Y_I) = z_I] < 2^{-|I|-1}`.
pub fn is_leaking(x: u32, y: &BlockDist, g: &Gadget) -> Option<LeakWitness> {
    for i in Coords::full(y.space.n).nonempty_subsets() {
        let d = pattern_distribution(x, y, g, i);
        let threshold = pow2(-(i64::from(i.len()) + 1));
        let hit = d.iter().find(|(_, p)| **p < threshold).map(|(&z, p)| (z, p.clone()));
        if let Some((pattern, prob)) = hit {
            return Some(LeakWitness { set: i, pattern, prob });
        }
    }
    None
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparsifyWitness {
    pub set: Coords,
    pub pattern: u32,
    /// Violating set `J ⊆ F - I` and its heaviest value.
    pub j: Coords,
    pub y_j: u32,
}

/// Some `I`, `z_I` of positive probability such that `Y_{F-I} | g^I(x_I,Y_I) = z_I`
/// is not `(δ_Y - ε)`-dense.
pub fn is_sparsifying(x: u32, y: &BlockDist, g: &Gadget, delta_y: &Rational, eps: &Rational) -> Option<SparsifyWitness> {
    let level = delta_y - eps;
    if level <= Rational::zero() {
        return None;
    }
    let all = Coords::full(y.space.n);
    let space = y.space;
    for i in all.nonempty_subsets() {
        let rest = all.minus(i);
        if rest.is_empty() {
            continue;
        }
        let d = pattern_distribution(x, y, g, i);
        for (&z, p) in d.iter() {
            if p.is_zero() {
                continue;
            }
            let cond = y.condition(|v| g.pattern(space, x, v, i) == z).expect("positive mass").project(rest);
            let DensityWitness { violating_set, .. } = is_dense(&cond, &level);
            if let Some(local) = violating_set {
                let y_j = *cond.project(local).dist.argmax();
                return Some(SparsifyWitness { set: i, pattern: z, j: rest.globalize(local), y_j });
            }
        }
    }
    None
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SkewWitness {
    pub set: Coords,
    pub j: Coords,
    pub y_j: u32,
}

/// Disjoint non-empty `I`, `J` and `y_J` with
/// `maxprob(g^I(x_I,Y_I) | Y_J=y_J) · Pr[Y_J=y_J] > 2^{-(|I| - ε·b·|J| + 1 + δ_Y·b·|J|)}`.
pub fn is_skewing(x: u32, y: &BlockDist, g: &Gadget, delta_y: &Rational, eps: &Rational) -> Option<SkewWitness> {
    let all = Coords::full(y.space.n);
    let space = y.space;
    let b = int(i64::from(space.b));
    for i in all.nonempty_subsets() {
        for j in all.minus(i).nonempty_subsets() {
            let jb = &b * int(i64::from(j.len()));
            let q = int(i64::from(i.len())) + int(1) + (delta_y - eps) * &jb;
            let marg = y.project(j);
            for (&yj, pj) in marg.dist.iter() {
                if pj.is_zero() {
                    continue;
                }
                let cond = y.condition(|v| space.project(v, j) == yj).expect("positive mass");
                let mp = pattern_distribution(x, &cond, g, i).max_prob();
                if compare_prob_to_threshold(&(mp * pj), &q) == Ordering::Greater {
                    return Some(SkewWitness { set: i, j, y_j: yj });
                }
            }
        }
    }
    None
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BiasWitness {
    pub s: Coords,
    pub j: Coords,
    pub y_j: u32,
    pub bias: Rational,
}

/// The size bound `|S| >= c·ε·|J| + (e_{y_J}+2)/log n`, cleared to
/// `(|S| - c·ε·|J|)·log n + log Pr[Y_J=y_J] + δ_Y·b·|J| - 2 >= 0`
/// (with `e = 0` when `J = ∅`).
pub fn size_bound_holds(s_len: u32, j_len: u32, p_j: &Rational, delta_y: &Rational, eps: &Rational, c: &Rational, b: u32, n: u32) -> bool {
    let jl = int(i64::from(j_len));
    let coef = int(i64::from(s_len)) - c * eps * &jl;
    let mut f = LogForm::constant(int(-2)).add_log2(&coef, &int(i64::from(n)));
    if j_len > 0 {
        f = f.add_log2(&Rational::one(), p_j).add_const(&(delta_y * int(i64::from(b)) * &jl));
    }
    f.sign() != Ordering::Less
}

/// Some non-empty `S`, `J ⊆ F - S`, `y_J` satisfying the size bound with
/// `bias(g^{⊕S}(x_S, Y_S) | Y_J = y_J) > ½·(2n)^{-|S|}`.
#[allow(clippy::too_many_arguments)]
pub fn is_biasing(x: u32, y: &BlockDist, g: &Gadget, delta_y: &Rational, eps: &Rational, c: &Rational, n: u32) -> Option<BiasWitness> {
    let all = Coords::full(y.space.n);
    let space = y.space;
    for s in all.nonempty_subsets() {
        let threshold = Rational::new(BigInt::one(), BigInt::from(2) * num_traits::pow(BigInt::from(2 * n), s.len() as usize));
        for j in all.minus(s).subsets() {
            let marg = y.project(j);
            for (&yj, pj) in marg.dist.iter() {
                if pj.is_zero() || !size_bound_holds(s.len(), j.len(), pj, delta_y, eps, c, space.b, n) {
                    continue;
                }
                let cond = y.condition(|v| space.project(v, j) == yj).expect("positive mass");
                let d = pattern_distribution(x, &cond, g, s);
                let odd: Rational = d.iter().filter(|(z, _)| z.count_ones() % 2 == 1).map(|(_, p)| p.clone()).sum();
                let bias = (Rational::one() - &odd - &odd).abs();
                if bias > threshold {
                    return Some(BiasWitness { s, j, y_j: yj, bias });
                }
            }
        }
    }
    None
}

/// Full classification of one value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DangerVerdict {
    pub leaking: Option<LeakWitness>,
    pub sparsifying: Option<SparsifyWitness>,
    pub skewing: Option<SkewWitness>,
    pub biasing: Option<BiasWitness>,
}

impl DangerVerdict {
    pub fn dangerous(&self) -> bool {
        self.leaking.is_some() || self.sparsifying.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct DangerParams {
    pub delta_y: Rational,
    pub eps: Rational,
    pub c: Rational,
    /// The ambient number of coordinates used in the biasing threshold.
    pub n: u32,
}

pub fn classify(x: u32, y: &BlockDist, g: &Gadget, p: &DangerParams) -> DangerVerdict {
    DangerVerdict {
        leaking: is_leaking(x, y, g),
        sparsifying: is_sparsifying(x, y, g, &p.delta_y, &p.eps),
        skewing: is_skewing(x, y, g, &p.delta_y, &p.eps),
        biasing: is_biasing(x, y, g, &p.delta_y, &p.eps, &p.c, p.n),
    }
}

/// `x` is leaking or ε-sparsifying.
pub fn is_dangerous(x: u32, y: &BlockDist, g: &Gadget, delta_y: &Rational, eps: &Rational) -> bool {
    is_leaking(x, y, g).is_some() || is_sparsifying(x, y, g, delta_y, eps).is_some()
}

/// Exact `X`-mass of dangerous values.
pub fn dangerous_probability(
    x: &BlockDist,
    y: &BlockDist,
    g: &Gadget,
    delta_y: &Rational,
    eps: &Rational,
    budget: ScanBudget,
) -> Result<Rational, StructureError> {
    budget.check(y)?;
    if x.space != y.space {
        return Err(StructureError::Shape(alloc::format!("{:?} vs {:?}", x.space, y.space)));
    }
    Ok(x.dist.iter().filter(|(&v, p)| !p.is_zero() && is_dangerous(v, y, g, delta_y, eps)).map(|(_, p)| p.clone()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::BlockSpace;
    use crate::structure::flat;

    fn g(name: &str) -> Gadget {
        Gadget::builtin(name).unwrap()
    }

    #[test]
    fn leaking_examples() {
        let s = BlockSpace::new(2, 1);
        let u = BlockDist::uniform(s);
        for x in s.points() {
            assert!(is_leaking(x, &u, &g("xor1")).is_none());
        }
        let w = is_leaking(0, &u, &g("and1")).unwrap();
        assert_eq!(w.prob, int(0));
        let empty = BlockDist::uniform(BlockSpace::new(0, 1));
        assert!(is_leaking(0, &empty, &g("and1")).is_none());
    }

    #[test]
    fn sparsifying_examples() {
        let s = BlockSpace::new(2, 1);
        let u = BlockDist::uniform(s);
        assert!(is_sparsifying(0, &u, &g("and1"), &int(1), &int(1)).is_none());
        for x in s.points() {
            assert!(is_sparsifying(x, &u, &g("xor1"), &int(1), &crate::rational::ratio(1, 4)).is_none());
        }
        let one = BlockDist::uniform(BlockSpace::new(1, 1));
        assert!(is_sparsifying(1, &one, &g("and1"), &int(1), &crate::rational::ratio(1, 4)).is_none());
    }

    #[test]
    fn skewing_and_biasing_on_uniform_xor() {
        let s = BlockSpace::new(2, 1);
        let u = BlockDist::uniform(s);
        let e = crate::rational::ratio(1, 4);
        for x in s.points() {
            // An exactly uniform output bit is still skewing when ε·b·|J| < 1.
            assert!(is_skewing(x, &u, &g("xor1"), &int(1), &e).is_some());
            assert!(is_skewing(x, &u, &g("xor1"), &int(1), &int(1)).is_none());
            assert!(is_biasing(x, &u, &g("xor1"), &int(1), &e, &int(64), 2).is_none());
        }
    }

    #[test]
    fn constant_parity_is_biasing() {
        // AND with x = 00: g^{⊕S} is constant 0, bias 1, and S = {1,2}, J = ∅ meets the bound at n = 2.
        let s = BlockSpace::new(2, 1);
        let u = BlockDist::uniform(s);
        let w = is_biasing(0, &u, &g("and1"), &int(1), &crate::rational::ratio(1, 4), &int(64), 2).unwrap();
        assert_eq!(w.s, Coords::full(2));
        assert_eq!(w.bias, int(1));
    }

    #[test]
    fn dangerous_probability_examples() {
        let s = BlockSpace::new(2, 1);
        let u = BlockDist::uniform(s);
        let e = crate::rational::ratio(1, 4);
        let p = dangerous_probability(&u, &u, &g("xor1"), &int(1), &e, ScanBudget::default()).unwrap();
        assert_eq!(p, int(0));
        let x = flat(s, &[0]);
        let p = dangerous_probability(&x, &u, &g("and1"), &int(1), &e, ScanBudget::default()).unwrap();
        assert_eq!(p, int(1));
    }
}
