//! Gadgets `g: Λ×Λ → {0,1}`, XOR powers, exact discrepancy, and the
//! extractor and sampling checkers.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{bias, Distribution};
use crate::error::{GadgetError, ParseError};
use crate::logcmp::compare_prob_to_threshold;
use crate::rational::{int, Rational};
use crate::space::{canonical_mask_cmp, BitVector, BlockSpace, Coords};

/// Largest block length accepted by [`Gadget`].
pub const MAX_B: u32 = 8;

/// Default limit on the side size `|Λ^S|` for exhaustive rectangle search.
pub const DEFAULT_SIDE_BUDGET: u64 = 16;

/// A two-party boolean function on `side_bits`-bit inputs.
pub trait BooleanGadget {
    fn side_bits(&self) -> u32;
    fn value(&self, x: u32, y: u32) -> bool;

    fn side(&self) -> u32 {
        1 << self.side_bits()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Gadget {
    b: u32,
    table: Vec<bool>,
    name: Option<String>,
}

impl Gadget {
    /// `rows[x][y] = g(x, y)`, rows in lexicographic order of `x`.
    pub fn from_rows(b: u32, rows: &[Vec<bool>]) -> Result<Gadget, GadgetError> {
        if b == 0 || b > MAX_B {
            return Err(GadgetError::SideBits { got: b, max: MAX_B });
        }
        let n = 1usize << b;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            let cols = rows.iter().map(Vec::len).find(|&l| l != n).unwrap_or(n);
            return Err(GadgetError::Shape { expected: n, rows: rows.len(), cols });
        }
        Ok(Gadget { b, table: rows.concat(), name: None })
    }

    pub fn from_fn<F: Fn(u32, u32) -> bool>(b: u32, f: F) -> Result<Gadget, GadgetError> {
        if b == 0 || b > MAX_B {
            return Err(GadgetError::SideBits { got: b, max: MAX_B });
        }
        let n = 1u32 << b;
        let table = (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).map(|(x, y)| f(x, y)).collect();
        Ok(Gadget { b, table, name: None })
    }

    pub fn with_name(mut self, name: &str) -> Gadget {
        self.name = Some(name.to_string());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn rows(&self) -> Vec<Vec<bool>> {
        self.table.chunks(1 << self.b).map(<[bool]>::to_vec).collect()
    }

    /// Table lookup with length-checked inputs.
    pub fn eval(&self, x: &BitVector, y: &BitVector) -> Result<bool, GadgetError> {
        for v in [x, y] {
            if v.len() != self.b as usize {
                return Err(GadgetError::InputLength { got: v.len(), expected: self.b as usize });
            }
        }
        Ok(self.value(x.to_u32(), y.to_u32()))
    }

    pub fn transpose(&self) -> Gadget {
        let mut g = Gadget::from_fn(self.b, |x, y| self.value(y, x)).expect("same shape");
        g.name = self.name.as_ref().map(|n| alloc::format!("{}^T", n));
        g
    }

    /// Apply permutations of `Λ` to both sides: `(x, y) ↦ g(px[x], py[y])`.
    pub fn permuted(&self, px: &[u32], py: &[u32]) -> Gadget {
        Gadget::from_fn(self.b, |x, y| self.value(px[x as usize], py[y as usize])).expect("same shape")
    }

    /// `g^I(x_I, y_I)` for points of `Λ^n`, as a pattern over `coords`
    /// (first coordinate most significant).
    pub fn pattern(&self, space: BlockSpace, x: u32, y: u32, coords: Coords) -> u32 {
        coords.iter().fold(0, |acc, i| (acc << 1) | u32::from(self.value(space.block(x, i), space.block(y, i))))
    }

    /// Parity of `g^I(x_I, y_I)`.
    pub fn xor_on(&self, space: BlockSpace, x: u32, y: u32, coords: Coords) -> bool {
        self.pattern(space, x, y, coords).count_ones() % 2 == 1
    }

    /// Componentwise lift `G = g^n`: `z_i = g(x_i, y_i)`.
    pub fn lift(&self, space: BlockSpace, x: u32, y: u32) -> u32 {
        self.pattern(space, x, y, Coords::full(space.n))
    }

    /// Built-in gadgets: `and1`, `or1`, `xor1`, `ip<b>`, `const0`, `const1`,
    /// and `rand:<b>:<seed>`.
    pub fn builtin(name: &str) -> Result<Gadget, GadgetError> {
        let bad = || GadgetError::Parse(ParseError::GadgetName(name.to_string()));
        let g = match name {
            "and1" | "and" => Gadget::from_fn(1, |x, y| x & y == 1)?,
            "or1" | "or" => Gadget::from_fn(1, |x, y| x | y == 1)?,
            "xor1" | "xor" => Gadget::from_fn(1, |x, y| x ^ y == 1)?,
            "const0" => Gadget::from_fn(1, |_, _| false)?,
            "const1" => Gadget::from_fn(1, |_, _| true)?,
            _ => {
                if let Some(rest) = name.strip_prefix("ip") {
                    let b: u32 = rest.parse().map_err(|_| bad())?;
                    inner_product(b)?
                } else if let Some(rest) = name.strip_prefix("rand:") {
                    let (b, seed) = rest.split_once(':').ok_or_else(bad)?;
                    let b: u32 = b.parse().map_err(|_| bad())?;
                    let seed: u64 = seed.parse().map_err(|_| bad())?;
                    random_gadget(b, seed)?
                } else {
                    return Err(bad());
                }
            }
        };
        Ok(g.with_name(name))
    }
}

impl BooleanGadget for Gadget {
    fn side_bits(&self) -> u32 {
        self.b
    }

    fn value(&self, x: u32, y: u32) -> bool {
        self.table[((x as usize) << self.b) | y as usize]
    }
}

pub fn inner_product(b: u32) -> Result<Gadget, GadgetError> {
    Gadget::from_fn(b, |x, y| (x & y).count_ones() % 2 == 1)
}

/// Each cell an independent fair bit from a ChaCha8 stream seeded with `seed`.
pub fn random_gadget(b: u32, seed: u64) -> Result<Gadget, GadgetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1u32 << b.min(MAX_B);
    let bits: Vec<bool> = (0..n * n).map(|_| rng.gen::<bool>()).collect();
    Gadget::from_fn(b, |x, y| bits[((x << b) | y) as usize])
}

pub fn eval(g: &Gadget, x: &BitVector, y: &BitVector) -> Result<bool, GadgetError> {
    g.eval(x, y)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MultiMode {
    /// `g^S`: the string of per-coordinate outputs.
    PerCoordinate,
    /// `g^{⊕S}`: the parity of that string.
    Parity,
}

/// `g` applied on `width` coordinates, inputs in `Λ^width`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultiGadget {
    pub base: Gadget,
    pub width: u32,
    pub mode: MultiMode,
}

impl MultiGadget {
    pub fn space(&self) -> BlockSpace {
        BlockSpace::new(self.width, self.base.b)
    }

    /// The output pattern `g^S(x, y)` (first coordinate most significant).
    pub fn pattern(&self, x: u32, y: u32) -> u32 {
        self.base.pattern(self.space(), x, y, Coords::full(self.width))
    }

    /// Output: the pattern in per-coordinate mode, the parity bit (0/1) in parity mode.
    pub fn eval(&self, x: u32, y: u32) -> u32 {
        match self.mode {
            MultiMode::PerCoordinate => self.pattern(x, y),
            MultiMode::Parity => self.pattern(x, y).count_ones() % 2,
        }
    }
}

/// As a boolean function a multi-gadget is its parity aggregate.
impl BooleanGadget for MultiGadget {
    fn side_bits(&self) -> u32 {
        self.base.b * self.width
    }

    fn value(&self, x: u32, y: u32) -> bool {
        self.pattern(x, y).count_ones() % 2 == 1
    }
}

/// `g^{⊕m}` on `Λ^m × Λ^m`.
pub fn xor_power(g: &Gadget, m: u32) -> MultiGadget {
    assert!(m >= 1);
    MultiGadget { base: g.clone(), width: m, mode: MultiMode::Parity }
}

/// A combinatorial rectangle `A × B` of side points (sorted, in `Λ^width`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rectangle {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub width: u32,
}

impl Rectangle {
    pub fn full<G: BooleanGadget + ?Sized>(g: &G, width: u32) -> Rectangle {
        let all: Vec<u32> = (0..g.side()).collect();
        Rectangle { a: all.clone(), b: all, width }
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty() || self.b.is_empty()
    }
}

fn signed_sum<G: BooleanGadget + ?Sized>(g: &G, a: &[u32], b: &[u32]) -> i64 {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).map(|(x, y)| if g.value(x, y) { -1i64 } else { 1 }).sum()
}

/// `|Pr[g=0 ∧ (U,V)∈R] - Pr[g=1 ∧ (U,V)∈R]|` with `U, V` uniform.
pub fn rectangle_discrepancy<G: BooleanGadget + ?Sized>(g: &G, r: &Rectangle) -> Rational {
    let n = i64::from(g.side());
    Rational::new(BigInt::from(signed_sum(g, &r.a, &r.b).abs()), BigInt::from(n * n))
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiscrepancyResult {
    pub value: Rational,
    pub argmax: Rectangle,
}

pub fn discrepancy<G: BooleanGadget + ?Sized>(g: &G) -> Result<DiscrepancyResult, GadgetError> {
    discrepancy_with_budget(g, DEFAULT_SIDE_BUDGET)
}

/// Exact maximum over all rectangles. For each row set `A` the best column set
/// is the set of columns with positive (or negative) signed sum, so only the
/// `2^|side|` row sets are enumerated. The witness is the first maximizer in
/// canonical order (by `A`, then `B`).
pub fn discrepancy_with_budget<G: BooleanGadget + ?Sized>(g: &G, budget: u64) -> Result<DiscrepancyResult, GadgetError> {
    let n = u64::from(g.side());
    if n > budget || n > 32 {
        return Err(GadgetError::Budget { side: n, budget: budget.min(32) });
    }
    let n = n as usize;
    let sign: Vec<Vec<i32>> = (0..n).map(|x| (0..n).map(|y| if g.value(x as u32, y as u32) { -1 } else { 1 }).collect()).collect();
    let mut col = vec_zero(n);
    let mut best: Option<(i64, u64, u64)> = None;
    // Gray-code walk over all row sets.
    let mut a: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let flip = step.trailing_zeros() as usize;
        a ^= 1 << flip;
        let add = a >> flip & 1 == 1;
        for (c, s) in col.iter_mut().zip(&sign[flip]) {
            *c += if add { i64::from(*s) } else { -i64::from(*s) };
        }
        let (mut pos, mut neg, mut bp, mut bn) = (0i64, 0i64, 0u64, 0u64);
        for (y, &c) in col.iter().enumerate() {
            if c > 0 {
                pos += c;
                bp |= 1 << y;
            } else if c < 0 {
                neg -= c;
                bn |= 1 << y;
            }
        }
        let (v, bmask) = match pos.cmp(&neg) {
            Ordering::Greater => (pos, bp),
            Ordering::Less => (neg, bn),
            Ordering::Equal => (pos, if canonical_mask_cmp(bp, bn) == Ordering::Greater { bn } else { bp }),
        };
        if v == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((bv, ba, bb)) => {
                v > bv || (v == bv && (canonical_mask_cmp(a, ba).then(canonical_mask_cmp(bmask, bb)) == Ordering::Less))
            }
        };
        if better {
            best = Some((v, a, bmask));
        }
    }
    let (v, am, bm) = best.expect("a single cell has non-zero imbalance");
    let to_vec = |m: u64| (0..n as u32).filter(|i| m >> i & 1 == 1).collect::<Vec<u32>>();
    let nn = (n * n) as i64;
    Ok(DiscrepancyResult {
        value: Rational::new(BigInt::from(v), BigInt::from(nn)),
        argmax: Rectangle { a: to_vec(am), b: to_vec(bm), width: g.side_bits() },
    })
}

fn vec_zero(n: usize) -> Vec<i64> {
    core::iter::repeat(0).take(n).collect()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct XorLemmaReport {
    pub m: u32,
    pub disc_g: Rational,
    pub lower: Rational,
    pub value: Rational,
    pub upper: Rational,
    pub sandwich_holds: bool,
}

pub fn check_xor_lemma(g: &Gadget, m: u32) -> Result<XorLemmaReport, GadgetError> {
    check_xor_lemma_with(g, m, &int(64), DEFAULT_SIDE_BUDGET)
}

/// `disc(g)^m <= disc(g^{⊕m}) <= min(1, (C·disc(g))^m)` with constant `C`.
pub fn check_xor_lemma_with(g: &Gadget, m: u32, upper_constant: &Rational, budget: u64) -> Result<XorLemmaReport, GadgetError> {
    let d = discrepancy_with_budget(g, budget)?.value;
    let value = discrepancy_with_budget(&xor_power(g, m), budget)?.value;
    let lower = num_traits::pow(d.clone(), m as usize);
    let mut upper = num_traits::pow(upper_constant * &d, m as usize);
    if upper > Rational::one() {
        upper = Rational::one();
    }
    let sandwich_holds = lower <= value && value <= upper;
    Ok(XorLemmaReport { m, disc_g: d, lower, value, upper, sandwich_holds })
}

/// Distribution of `g(X, Y)` for independent `X, Y`.
pub fn output_distribution<G: BooleanGadget + ?Sized>(g: &G, x: &Distribution<u32>, y: &Distribution<u32>) -> Distribution<bool> {
    let mut p1 = Rational::zero();
    for (&a, pa) in x.iter() {
        for (&b, pb) in y.iter() {
            if g.value(a, b) {
                p1 += pa * pb;
            }
        }
    }
    Distribution::new([(false, Rational::one() - &p1), (true, p1)]).expect("probabilities")
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExtractorReport {
    pub hypothesis: bool,
    pub disc_ok: bool,
    pub entropy_ok: bool,
    pub bias: Rational,
    /// The conclusion is `bias <= 2^-bound_exponent`.
    pub bound_exponent: Rational,
    pub conclusion: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SamplingReport {
    pub hypothesis: bool,
    pub disc_ok: bool,
    pub entropy_ok: bool,
    pub bad_mass: Rational,
    /// The conclusion is `bad_mass < 2^-bound_exponent`.
    pub bound_exponent: Rational,
    pub conclusion: bool,
}

fn disc_ok(g: &Gadget, eta: &Rational) -> Result<bool, GadgetError> {
    let d = discrepancy(g)?.value;
    Ok(compare_prob_to_threshold(&d, &(eta * int(i64::from(g.b)))) != Ordering::Greater)
}

/// `H∞(X) + H∞(Y) >= q`, i.e. `maxprob(X)·maxprob(Y) <= 2^-q`.
fn entropy_sum_at_least(x: &Distribution<u32>, y: &Distribution<u32>, q: &Rational) -> bool {
    compare_prob_to_threshold(&(x.max_prob() * y.max_prob()), q) != Ordering::Greater
}

fn extractor_core<G: BooleanGadget>(
    g: &Gadget,
    h: &G,
    x: &Distribution<u32>,
    y: &Distribution<u32>,
    eta: &Rational,
    entropy_exp: Rational,
    bound_exponent: Rational,
) -> Result<ExtractorReport, GadgetError> {
    let disc_ok = disc_ok(g, eta)?;
    let entropy_ok = entropy_sum_at_least(x, y, &entropy_exp);
    let b = bias(&output_distribution(h, x, y));
    let conclusion = compare_prob_to_threshold(&b, &bound_exponent) != Ordering::Greater;
    Ok(ExtractorReport { hypothesis: disc_ok && entropy_ok, disc_ok, entropy_ok, bias: b, bound_exponent, conclusion })
}

fn sampling_core<G: BooleanGadget>(
    g: &Gadget,
    h: &G,
    x: &Distribution<u32>,
    y: &Distribution<u32>,
    eta: &Rational,
    entropy_exp: Rational,
    lambda_exp: &Rational,
    bound_exponent: Rational,
) -> Result<SamplingReport, GadgetError> {
    let disc_ok = disc_ok(g, eta)?;
    let entropy_ok = entropy_sum_at_least(x, y, &entropy_exp);
    let mut bad_mass = Rational::zero();
    for (&a, pa) in x.iter() {
        let b = bias(&output_distribution(h, &Distribution::point(a), y));
        if compare_prob_to_threshold(&b, lambda_exp) == Ordering::Greater {
            bad_mass += pa;
        }
    }
    let conclusion = compare_prob_to_threshold(&bad_mass, &bound_exponent) == Ordering::Less;
    Ok(SamplingReport { hypothesis: disc_ok && entropy_ok, disc_ok, entropy_ok, bad_mass, bound_exponent, conclusion })
}

/// Hypothesis: `disc(g) <= |Λ|^-η` and `H∞(X)+H∞(Y) >= (2-η+λ)·log|Λ|`.
/// Conclusion: `bias(g(X,Y)) <= |Λ|^-λ`.
pub fn extractor_check(g: &Gadget, x: &Distribution<u32>, y: &Distribution<u32>, eta: &Rational, lambda: &Rational) -> Result<ExtractorReport, GadgetError> {
    let k = int(i64::from(g.b));
    extractor_core(g, g, x, y, eta, (int(2) - eta + lambda) * &k, lambda * &k)
}

/// Hypothesis: `disc(g) <= |Λ|^-η` and `H∞(X)+H∞(Y) >= (2-η+γ+λ)·log|Λ| + 1`.
/// Conclusion: `Pr[bias(g(X,Y)|X) > |Λ|^-λ] < |Λ|^-γ`.
pub fn sampling_check(
    g: &Gadget,
    x: &Distribution<u32>,
    y: &Distribution<u32>,
    gamma: &Rational,
    lambda: &Rational,
    eta: &Rational,
) -> Result<SamplingReport, GadgetError> {
    let k = int(i64::from(g.b));
    let ent = (int(2) - eta + gamma + lambda) * &k + int(1);
    sampling_core(g, g, x, y, eta, ent, &(lambda * &k), gamma * &k)
}

/// `X, Y` over `Λ^S` with `|S| = width`. Hypothesis entropy is
/// `(2 + 6/b - η + λ)·|S|·b`; conclusion `bias(g^{⊕S}(X,Y)) <= |Λ|^{-λ|S|}`.
pub fn xor_extractor_check(
    g: &Gadget,
    width: u32,
    x: &Distribution<u32>,
    y: &Distribution<u32>,
    eta: &Rational,
    lambda: &Rational,
) -> Result<ExtractorReport, GadgetError> {
    let b = int(i64::from(g.b));
    let sb = int(i64::from(width)) * &b;
    let ent = (int(2) + int(6) / &b - eta + lambda) * &sb;
    extractor_core(g, &xor_power(g, width), x, y, eta, ent, lambda * &sb)
}

/// As [`xor_extractor_check`] for sampling, with entropy `(2 + 7/b - η + γ + λ)·|S|·b`
/// and bound `|Λ|^{-γ|S|}`.
pub fn xor_sampling_check(
    g: &Gadget,
    width: u32,
    x: &Distribution<u32>,
    y: &Distribution<u32>,
    gamma: &Rational,
    lambda: &Rational,
    eta: &Rational,
) -> Result<SamplingReport, GadgetError> {
    let b = int(i64::from(g.b));
    let sb = int(i64::from(width)) * &b;
    let ent = (int(2) + int(7) / &b - eta + gamma + lambda) * &sb;
    sampling_core(g, &xor_power(g, width), x, y, eta, ent, &(lambda * &sb), gamma * &sb)
}
