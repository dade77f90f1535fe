use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Zero};

use crate::error::SimError;
use crate::gadget::{discrepancy, Gadget};
use crate::logcmp::{cmp_pow2, LogForm};
use crate::protocol::Complexity;
use crate::rational::{format_rational, int, ratio, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Deterministic,
    Randomized,
}

/// How the truncation threshold of the randomized simulation is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TruncationReading {
    /// `p_{>=j} < 2^{-(η/8)·b} / (16·n·b)`, matching the correctness and complexity analyses.
    #[default]
    Scaled,
    /// `p_{>=j} < 2^{-η/8} / (16·n·b)`, as the construction's step is literally written.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftingParams {
    pub mode: Mode,
    pub eta: Rational,
    pub c: Rational,
    pub h: Rational,
    pub b: u32,
    pub n: u32,
    pub eps: Rational,
    pub delta: Rational,
    pub tau: Rational,
    pub gamma: Rational,
    pub truncation: TruncationReading,
    /// Set when any derived value was overridden.
    pub nonstandard: bool,
}

/// `log2 c` when `c` is a power of two.
fn exact_log2(c: &Rational) -> Option<i64> {
    if !c.is_integer() || *c <= Rational::zero() {
        return None;
    }
    let n = c.to_integer();
    let bits = n.bits();
    (n == num_bigint::BigInt::one() << (bits - 1)).then(|| bits as i64 - 1)
}

impl LiftingParams {
    pub fn new(mode: Mode, eta: Rational, c: Rational, h: Rational, b: u32, n: u32) -> Result<LiftingParams, SimError> {
        if eta <= Rational::zero() || c <= Rational::zero() || h <= Rational::zero() {
            return Err(SimError::Params(String::from("eta, c and h must be positive")));
        }
        if b == 0 {
            return Err(SimError::Params(String::from("b must be at least 1")));
        }
        let eps = match mode {
            Mode::Deterministic => &h / (&c * &eta),
            Mode::Randomized => {
                let lc = exact_log2(&c).ok_or_else(|| {
                    SimError::Params(format!(
                        "log c is irrational for c = {}; use a power of two or override eps",
                        format_rational(&c)
                    ))
                })?;
                &h * int(lc) / (&c * &eta)
            }
        };
        let delta = Rational::one() - &eta / int(4) + &eps / int(2);
        let tau = &delta * int(2) - &eps;
        Ok(LiftingParams {
            mode,
            eta,
            c,
            h,
            b,
            n,
            eps,
            delta,
            tau,
            gamma: ratio(1, i64::from(b)),
            truncation: TruncationReading::Scaled,
            nonstandard: false,
        })
    }

    /// `η = 1/2`, `c = 64`, `h = 1`.
    pub fn standard(mode: Mode, b: u32, n: u32) -> LiftingParams {
        LiftingParams::new(mode, ratio(1, 2), int(64), int(1), b, n).expect("standard parameters are valid")
    }

    pub fn with_eps(mut self, eps: Rational) -> Self {
        self.eps = eps;
        self.nonstandard = true;
        self
    }

    pub fn with_delta(mut self, delta: Rational) -> Self {
        self.delta = delta;
        self.nonstandard = true;
        self
    }

    pub fn with_tau(mut self, tau: Rational) -> Self {
        self.tau = tau;
        self.nonstandard = true;
        self
    }

    pub fn with_gamma(mut self, gamma: Rational) -> Self {
        self.gamma = gamma;
        self.nonstandard = true;
        self
    }

    pub fn with_truncation(mut self, t: TruncationReading) -> Self {
        self.truncation = t;
        self
    }

    /// The other reading of `δ` used in the randomized complexity calculation: `1 − η/8 + ε/2`.
    pub fn delta_alternative(&self) -> Rational {
        Rational::one() - &self.eta / int(8) + &self.eps / int(2)
    }

    /// `p_{>=j}` is below the truncation threshold.
    pub fn truncates(&self, p_geq: &Rational) -> bool {
        let scaled = p_geq * int(16 * i64::from(self.n) * i64::from(self.b));
        let e = match self.truncation {
            TruncationReading::Scaled => -(&self.eta * int(i64::from(self.b)) / int(8)),
            TruncationReading::Constant => -(&self.eta / int(8)),
        };
        cmp_pow2(&scaled, &e) == Ordering::Less
    }

    /// `K > C + b`, with `K = log(1/Π p_M)` given as the product.
    pub fn k_exceeded(&self, product: &Rational, comm: u32) -> bool {
        cmp_pow2(product, &int(-(i64::from(comm) + i64::from(self.b)))) == Ordering::Less
    }
}

/// One numerically checked hypothesis of the theorem's regime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub name: String,
    /// `None` when the check was out of budget.
    pub holds: Option<bool>,
    pub detail: String,
}

fn hyp(name: &str, holds: Option<bool>, detail: String) -> Hypothesis {
    Hypothesis { name: String::from(name), holds, detail }
}

/// Every regime inequality the guarantees depend on, evaluated exactly.
pub fn regime_hypotheses(p: &LiftingParams, g: &Gadget, comm: Complexity) -> Vec<Hypothesis> {
    let b = int(i64::from(p.b));
    let n = int(i64::from(p.n.max(1)));
    let mut out = Vec::new();

    let disc = discrepancy(g).ok().map(|d| d.value);
    let e = -(&p.eta * &b);
    out.push(hyp(
        "disc(g) <= 2^(-eta*b)",
        disc.as_ref().map(|d| cmp_pow2(d, &e) != Ordering::Greater),
        disc.map_or_else(|| String::from("discrepancy out of budget"), |d| format!("disc = {}", format_rational(&d))),
    ));

    let f = LogForm::constant(b.clone()).add_log2(&-p.c.clone(), &n);
    out.push(hyp("b >= c*log n", Some(f.sign() != Ordering::Less), format!("b = {}, n = {}", p.b, p.n)));

    out.push(hyp("n >= 2", Some(p.n >= 2), format!("n = {}", p.n)));

    let four_b = int(4) / &b;
    out.push(hyp("eps >= 4/b", Some(p.eps >= four_b), format!("eps = {}", format_rational(&p.eps))));

    let base = int(2) + &p.h / (&p.c * &p.eps) - &p.eta;
    match p.mode {
        Mode::Deterministic => {
            let need = base + ratio(1, i64::from(p.b));
            out.push(hyp(
                "tau >= 2 + h/(c*eps) - eta + 1/b",
                Some(p.tau >= need),
                format!("tau = {}, rhs = {}", format_rational(&p.tau), format_rational(&need)),
            ));
            let coef = Rational::one() - &p.delta - int(2) / &b;
            out.push(hyp(
                "1 - delta - 2/b > 0",
                Some(coef > Rational::zero()),
                format!("1 - delta - 2/b = {}", format_rational(&coef)),
            ));
        }
        Mode::Randomized => {
            // τ >= 2 + h/(cε) − η + η/8 + 3·log c/c + 4/b, with log c kept symbolic.
            let lhs = LogForm::constant(&p.tau - base - &p.eta / int(8) - int(4) / &b)
                .add_log2(&(-int(3) / &p.c), &p.c);
            out.push(hyp(
                "tau >= 2 + h/(c*eps) - eta + eta/8 + 3*log(c)/c + 4/b",
                Some(lhs.sign() != Ordering::Less),
                format!("tau = {}", format_rational(&p.tau)),
            ));
            let coef = Rational::one() - &p.delta - &p.eta / int(8) - int(7) / &p.c;
            out.push(hyp(
                "1 - delta - eta/8 - 7/c > 0",
                Some(coef > Rational::zero()),
                format!("1 - delta - eta/8 - 7/c = {}", format_rational(&coef)),
            ));
            let cap = 2 * p.b * p.n;
            out.push(hyp("C <= 2*b*n", Some(comm.c <= cap), format!("C = {}, 2bn = {}", comm.c, cap)));
            // log(2nb) + 3 + (η/8)·b <= (η/8 + 6/c)·b, the per-query form of the truncation cost.
            let f = LogForm::constant(int(3) - int(6) * &b / &p.c)
                .add_log2(&Rational::one(), &int(2 * i64::from(p.n.max(1)) * i64::from(p.b)));
            out.push(hyp(
                "log(2nb) + 3 <= (6/c)*b",
                Some(f.sign() != Ordering::Greater),
                format!("n = {}, b = {}", p.n, p.b),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_derivations() {
        let d = LiftingParams::standard(Mode::Deterministic, 2, 2);
        assert_eq!(d.eps, ratio(1, 32));
        assert_eq!(d.delta, ratio(57, 64));
        assert_eq!(d.tau, ratio(7, 4));
        assert_eq!(d.gamma, ratio(1, 2));
        let r = LiftingParams::standard(Mode::Randomized, 2, 2);
        assert_eq!(r.eps, ratio(3, 16));
        assert_eq!(r.delta, ratio(31, 32));
        assert_eq!(r.tau, ratio(7, 4));
        assert!(LiftingParams::new(Mode::Randomized, ratio(1, 2), int(48), int(1), 2, 2).is_err());
        assert!(LiftingParams::new(Mode::Deterministic, ratio(1, 2), int(48), int(1), 2, 2).is_ok());
    }

    #[test]
    fn truncation_readings() {
        // n = 2, b = 2, η = 1/2: thresholds 2^{-1/8}/64 and 2^{-1/16}/64.
        let p = LiftingParams::standard(Mode::Randomized, 2, 2);
        assert!(p.truncates(&ratio(1, 70)));
        assert!(!p.truncates(&ratio(1, 69)));
        let q = p.clone().with_truncation(TruncationReading::Constant);
        assert!(q.truncates(&ratio(1, 67)));
        assert!(!q.truncates(&ratio(1, 66)));
    }

    #[test]
    fn k_threshold() {
        let p = LiftingParams::standard(Mode::Randomized, 2, 2);
        assert!(!p.k_exceeded(&ratio(1, 256), 6));
        assert!(p.k_exceeded(&ratio(1, 257), 6));
    }

    #[test]
    fn desk_scale_regime_fails() {
        let p = LiftingParams::standard(Mode::Deterministic, 2, 2);
        let g = Gadget::builtin("ip2").unwrap();
        let hs = regime_hypotheses(&p, &g, Complexity { c: 6, r: 4 });
        let get = |name: &str| hs.iter().find(|h| h.name == name).unwrap().holds;
        assert_eq!(get("b >= c*log n"), Some(false));
        assert_eq!(get("eps >= 4/b"), Some(false));
        assert_eq!(get("n >= 2"), Some(true));
    }
}
