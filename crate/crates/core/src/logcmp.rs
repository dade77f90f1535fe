//! Exact sign decisions for expressions of the form
//! `c + sum_k a_k * log2(r_k)` with rational `c`, `a_k` and positive rational `r_k`.
//!
//! Numerators and denominators are split over a pairwise coprime base. If only
//! the prime 2 survives with a non-zero weight the value is rational and the
//! sign is read off directly. Otherwise the value is irrational (hence non-zero)
//! and rigorous fixed-point bounds on `log2` are refined until they exclude 0.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Default)]
pub struct LogForm {
    constant: Rational,
    terms: Vec<(Rational, Rational)>,
}

impl LogForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        LogForm { constant: c, terms: Vec::new() }
    }

    pub fn add_const(mut self, c: &Rational) -> Self {
        self.constant += c;
        self
    }

    /// Adds `coef * log2(base)`. `base` must be positive.
    pub fn add_log2(mut self, coef: &Rational, base: &Rational) -> Self {
        assert!(base.is_positive(), "log2 of a non-positive number");
        if !coef.is_zero() && !base.is_one() {
            self.terms.push((coef.clone(), base.clone()));
        }
        self
    }

    /// Sign of the expression, compared with zero.
    pub fn sign(&self) -> Ordering {
        let mut ints: Vec<BigUint> = vec![BigUint::from(2u8)];
        for (_, r) in &self.terms {
            for v in [r.numer().magnitude(), r.denom().magnitude()] {
                if !v.is_one() {
                    ints.push(v.clone());
                }
            }
        }
        let base = coprime_base(ints);
        let mut weights = vec![Rational::zero(); base.len()];
        for (coef, r) in &self.terms {
            for (i, e) in factor(r.numer().magnitude(), &base).into_iter().enumerate() {
                if e != 0 {
                    weights[i] += coef * Rational::from_integer(BigInt::from(e));
                }
            }
            for (i, e) in factor(r.denom().magnitude(), &base).into_iter().enumerate() {
                if e != 0 {
                    weights[i] -= coef * Rational::from_integer(BigInt::from(e));
                }
            }
        }
        let mut rational_part = self.constant.clone();
        let mut irr: Vec<(Rational, BigUint)> = Vec::new();
        for (w, q) in weights.into_iter().zip(base) {
            if w.is_zero() {
                continue;
            }
            if q.count_ones() == 1 {
                // q = 2^k
                let k = q.bits() - 1;
                rational_part += w * Rational::from_integer(BigInt::from(k));
            } else {
                irr.push((w, q));
            }
        }
        if irr.is_empty() {
            return rational_part.cmp(&Rational::zero());
        }
        let mut prec = 64u32;
        loop {
            let mut lo = rational_part.clone();
            let mut hi = rational_part.clone();
            for (w, q) in &irr {
                let (l, h) = log2_bounds(q, prec);
                if w.is_positive() {
                    lo += w * &l;
                    hi += w * &h;
                } else {
                    lo += w * &h;
                    hi += w * &l;
                }
            }
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            prec = prec.saturating_mul(2);
        }
    }
}

/// Compare `x` with `2^e` exactly. `x` must be non-negative.
pub fn cmp_pow2(x: &Rational, e: &Rational) -> Ordering {
    if !x.is_positive() {
        return Ordering::Less;
    }
    let a = e.numer();
    let d = e.denom();
    if let (Some(d), Some(a)) = (d.to_u32(), a.to_i64()) {
        let cheap = d <= 64
            && a.unsigned_abs() <= 4096
            && (x.numer().bits() + x.denom().bits()) * u64::from(d) <= 1 << 16;
        if cheap {
            // x^d vs 2^a
            let xn = num_traits::pow(x.numer().clone(), d as usize);
            let xd = num_traits::pow(x.denom().clone(), d as usize);
            let (lhs, rhs) = if a >= 0 { (xn, xd << (a as u64)) } else { (xn << a.unsigned_abs(), xd) };
            return lhs.cmp(&rhs);
        }
    }
    LogForm::constant(-e.clone()).add_log2(&Rational::one(), x).sign()
}

/// Sign of `p - 2^(-q)`: `Greater` when `p` exceeds the threshold.
pub fn compare_prob_to_threshold(p: &Rational, q: &Rational) -> Ordering {
    cmp_pow2(p, &-q.clone())
}

/// Exact comparison of `log2(x)` with `t`.
pub fn cmp_log2(x: &Rational, t: &Rational) -> Ordering {
    cmp_pow2(x, t)
}

fn coprime_base(nums: Vec<BigUint>) -> Vec<BigUint> {
    let mut base: Vec<BigUint> = Vec::new();
    let mut pending = nums;
    while let Some(x) = pending.pop() {
        if x.is_one() || x.is_zero() {
            continue;
        }
        if base.contains(&x) {
            continue;
        }
        let mut split = None;
        for (i, e) in base.iter().enumerate() {
            let g = e.gcd(&x);
            if !g.is_one() {
                split = Some((i, g));
                break;
            }
        }
        match split {
            None => base.push(x),
            Some((i, g)) => {
                let e = base.swap_remove(i);
                pending.push(&e / &g);
                pending.push(&x / &g);
                pending.push(g);
            }
        }
    }
    base
}

fn factor(n: &BigUint, base: &[BigUint]) -> Vec<u64> {
    let mut n = n.clone();
    let mut out = vec![0u64; base.len()];
    for (i, q) in base.iter().enumerate() {
        loop {
            let (d, r) = n.div_rem(q);
            if !r.is_zero() {
                break;
            }
            n = d;
            out[i] += 1;
        }
    }
    debug_assert!(n.is_one(), "coprime base does not cover the input");
    out
}

/// Rigorous bounds `lo <= log2(q) <= hi` with `hi - lo <= 2^-k`, `k <= prec`.
pub fn log2_bounds(q: &BigUint, prec: u32) -> (Rational, Rational) {
    assert!(!q.is_zero());
    let e = q.bits() - 1;
    let w = u64::from(prec) + 64;
    // m = q / 2^e in [1, 2), held as fixed point with w fractional bits.
    let (mut lo, mut hi) = if w >= e {
        let v = q << (w - e);
        (v.clone(), v)
    } else {
        let sh = e - w;
        let fl = q >> sh;
        let exact = (&fl << sh) == *q;
        let ce = if exact { fl.clone() } else { &fl + 1u32 };
        (fl, ce)
    };
    let two = BigUint::one() << (w + 1);
    let mut acc = BigUint::zero();
    let mut k = 0u32;
    for _ in 0..prec {
        lo = (&lo * &lo) >> w;
        let sq = &hi * &hi;
        let fl = &sq >> w;
        hi = if (&fl << w) == sq { fl } else { fl + 1u32 };
        if lo >= two {
            acc = (acc << 1u32) + 1u32;
            lo >>= 1u32;
            hi = if hi.is_odd() { (hi >> 1u32) + 1u32 } else { hi >> 1u32 };
        } else if hi < two {
            acc <<= 1u32;
        } else {
            break;
        }
        k += 1;
    }
    let den = BigInt::one() << k;
    let base = Rational::from_integer(BigInt::from(e));
    let acc = BigInt::from(acc);
    let l = &base + Rational::new(acc.clone(), den.clone());
    let h = base + Rational::new(acc + 1, den);
    (l, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn log2_three_bracketed() {
        let (l, h) = log2_bounds(&BigUint::from(3u8), 40);
        // log2(3) = 1.5849625007...
        assert!(l < ratio(15849626, 10000000));
        assert!(h > ratio(15849624, 10000000));
        assert!(&h - &l <= ratio(1, 1 << 30));
    }

    #[test]
    fn exact_zero_detected() {
        // log2(6) - log2(3) - 1 = 0
        let f = LogForm::constant(int(-1)).add_log2(&int(1), &int(6)).add_log2(&int(-1), &int(3));
        assert_eq!(f.sign(), Ordering::Equal);
        // 2*log2(3) - log2(9) = 0 with the 9 written as 18/2
        let f = LogForm::new().add_log2(&int(2), &int(3)).add_log2(&int(-1), &ratio(18, 2));
        assert_eq!(f.sign(), Ordering::Equal);
    }

    #[test]
    fn threshold_examples() {
        // (1/3)^2 = 1/9 < 1/8 = (2^(-3/2))^2
        assert_eq!(compare_prob_to_threshold(&ratio(1, 3), &ratio(3, 2)), Ordering::Less);
        assert_eq!(compare_prob_to_threshold(&ratio(1, 2), &int(1)), Ordering::Equal);
        assert_eq!(compare_prob_to_threshold(&ratio(1, 4), &int(2)), Ordering::Equal);
        assert_eq!(compare_prob_to_threshold(&int(0), &int(1)), Ordering::Less);
        // 1/3 vs 2^-(1585/1000): log2 3 = 1.58496... < 1.585, so 1/3 > threshold
        assert_eq!(compare_prob_to_threshold(&ratio(1, 3), &ratio(1585, 1000)), Ordering::Greater);
        assert_eq!(compare_prob_to_threshold(&ratio(1, 3), &ratio(1584, 1000)), Ordering::Less);
    }

    #[test]
    fn large_denominator_uses_log_form() {
        let q = ratio(1_584_962_500, 1_000_000_000);
        let direct = LogForm::constant(q.clone()).add_log2(&int(1), &ratio(1, 3)).sign();
        assert_eq!(direct, Ordering::Less);
        assert_eq!(compare_prob_to_threshold(&ratio(1, 3), &q), Ordering::Less);
        let q = ratio(1_584_962_501, 1_000_000_000);
        assert_eq!(compare_prob_to_threshold(&ratio(1, 3), &q), Ordering::Greater);
    }

    #[test]
    fn coprime_base_is_coprime() {
        let b = coprime_base(vec![BigUint::from(12u8), BigUint::from(18u8), BigUint::from(35u8), BigUint::from(2u8)]);
        for i in 0..b.len() {
            for j in 0..i {
                assert!(b[i].gcd(&b[j]).is_one());
            }
        }
        for n in [12u8, 18, 35] {
            let _ = factor(&BigUint::from(n), &b);
        }
    }
}
