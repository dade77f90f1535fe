//! Fourier analysis of distributions over `{0,1}^m` and the two Vazirani checkers.
//!
//! Coefficients are taken of the mass function `μ`:
//! `μ̂(S) = 2^-m · Σ_z μ(z) χ_S(z)`, so `|μ̂(S)| = 2^-m · bias(⊕_{i∈S} Z_i)`
//! and `μ̂(∅) = 2^-m`. Coordinate 1 is the most significant bit of `z`.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use crate::dist::{bias, Distribution};
use crate::rational::{pow2, Rational};
use crate::space::Coords;

/// Parity of the bits of `z` selected by `s` (coordinate `i` is bit `m-1-i`).
pub fn parity(z: u32, m: u32, s: Coords) -> bool {
    let mask = s.iter().fold(0u32, |acc, i| acc | 1 << (m - 1 - i));
    (z & mask).count_ones() % 2 == 1
}

/// `χ_S(z) = (-1)^{⊕_{i∈S} z_i}`.
pub fn character(z: u32, m: u32, s: Coords) -> i32 {
    if parity(z, m, s) {
        -1
    } else {
        1
    }
}

pub fn fourier_coefficient(d: &Distribution<u32>, m: u32, s: Coords) -> Rational {
    let sum: Rational = d.iter().map(|(&z, p)| if parity(z, m, s) { -p.clone() } else { p.clone() }).sum();
    sum * pow2(-(m as i64))
}

/// `bias(⊕_{i∈S} Z_i)`.
pub fn xor_bias(d: &Distribution<u32>, m: u32, s: Coords) -> Rational {
    bias(&d.map(|&z| parity(z, m, s)))
}

/// All `2^m` coefficients, indexed by the coordinate mask of `S`.
pub fn fourier_transform(d: &Distribution<u32>, m: u32) -> Vec<Rational> {
    (0u32..1 << m).map(|s| fourier_coefficient(d, m, Coords(s))).collect()
}

/// `μ(z) = Σ_S μ̂(S) χ_S(z)` for every `z ∈ {0,1}^m`.
pub fn fourier_inversion(coeffs: &[Rational], m: u32) -> Vec<Rational> {
    (0u32..1 << m)
        .map(|z| {
            coeffs
                .iter()
                .enumerate()
                .map(|(s, c)| if parity(z, m, Coords(s as u32)) { -c.clone() } else { c.clone() })
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VaziraniReport {
    pub hypothesis: bool,
    pub conclusion: bool,
    /// Non-empty `S` maximizing `bias(⊕_S Z)·(2m)^|S|`, first in canonical order.
    pub worst_set: Coords,
    /// `z` maximizing `|μ(z) - 2^-m|`, smallest first.
    pub worst_point: u32,
}

fn two_m_pow(m: u32, k: u32) -> Rational {
    Rational::from_integer(num_traits::pow(BigInt::from(2 * m), k as usize))
}

pub fn vazirani_uniformity_check(d: &Distribution<u32>, m: u32, eps: &Rational) -> VaziraniReport {
    let mut hypothesis = true;
    let mut worst_set = Coords::EMPTY;
    let mut worst_score = Rational::from_integer((-1).into());
    for s in Coords::full(m).nonempty_subsets() {
        let scaled = xor_bias(d, m, s) * two_m_pow(m, s.len());
        if &scaled > eps {
            hypothesis = false;
        }
        if scaled > worst_score {
            worst_score = scaled;
            worst_set = s;
        }
    }
    let u = pow2(-(m as i64));
    let lo = (Rational::one() - eps) * &u;
    let hi = (Rational::one() + eps) * &u;
    let mut conclusion = true;
    let mut worst_point = 0;
    let mut worst_dev = Rational::from_integer((-1).into());
    for z in 0u32..1 << m {
        let p = d.mass(&z);
        if p < lo || p > hi {
            conclusion = false;
        }
        let dev = (&p - &u).abs();
        if dev > worst_dev {
            worst_dev = dev;
            worst_point = z;
        }
    }
    VaziraniReport { hypothesis, conclusion, worst_set, worst_point }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinEntropyReport {
    pub hypothesis: bool,
    pub conclusion: bool,
}

/// Hypothesis: `bias(⊕_S Z) <= (2m)^-|S|` for all `|S| >= t`.
/// Conclusion: `H∞(Z) >= m - t·log m - 1`, checked as `maxprob·2^(m-1) <= m^t`.
pub fn vazirani_minentropy_check(d: &Distribution<u32>, m: u32, t: u32) -> MinEntropyReport {
    let hypothesis = Coords::full(m)
        .subsets()
        .into_iter()
        .filter(|s| s.len() >= t)
        .all(|s| xor_bias(d, m, s) * two_m_pow(m, s.len()) <= Rational::one());
    let lhs = d.max_prob() * pow2(m as i64 - 1);
    let rhs = Rational::from_integer(num_traits::pow(BigInt::from(m), t as usize));
    MinEntropyReport { hypothesis, conclusion: lhs <= rhs }
}

/// Exact check of `|μ̂(S)| = 2^-m·bias(⊕_S Z)` for every `S`.
pub fn fourier_bias_identity_holds(d: &Distribution<u32>, m: u32) -> bool {
    let scale = pow2(-(m as i64));
    (0u32..1 << m).all(|s| fourier_coefficient(d, m, Coords(s)).abs() == &scale * xor_bias(d, m, Coords(s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn coefficient_examples() {
        let u = Distribution::uniform(0u32..4).unwrap();
        assert_eq!(fourier_coefficient(&u, 2, Coords(0b11)), int(0));
        assert_eq!(fourier_coefficient(&u, 2, Coords::EMPTY), ratio(1, 4));
        let p = Distribution::point(0b11u32);
        assert_eq!(fourier_coefficient(&p, 2, Coords(0b11)), ratio(1, 4));
        assert_eq!(fourier_coefficient(&p, 2, Coords::singleton(0)), ratio(-1, 4));
    }

    #[test]
    fn inversion_roundtrip() {
        let d = Distribution::new([(0u32, ratio(1, 2)), (1, ratio(1, 3)), (3, ratio(1, 6))]).unwrap();
        let back = fourier_inversion(&fourier_transform(&d, 2), 2);
        for z in 0..4u32 {
            assert_eq!(back[z as usize], d.mass(&z));
        }
    }

    #[test]
    fn vazirani_examples() {
        let u = Distribution::uniform(0u32..4).unwrap();
        let r = vazirani_uniformity_check(&u, 2, &int(0));
        assert!(r.hypothesis && r.conclusion);
        let p = Distribution::point(0u32);
        assert!(!vazirani_uniformity_check(&p, 2, &ratio(1, 2)).hypothesis);
        let m1 = vazirani_minentropy_check(&Distribution::point(1u32), 1, 1);
        assert!(m1.conclusion);
        let half = Distribution::uniform([0b00u32, 0b01]).unwrap();
        let r = vazirani_minentropy_check(&half, 2, 2);
        assert!(r.hypothesis && r.conclusion);
    }
}
