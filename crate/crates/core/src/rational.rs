//! Exact rational helpers.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;

/// Exact rational number used for every probability and parameter.
pub type Rational = BigRational;

/// `n / d` as a rational. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^e` for a (possibly negative) integer exponent.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

pub fn is_dyadic(r: &Rational) -> bool {
    let d = r.denom().magnitude();
    d.count_ones() == 1
}

/// Parse `"p/q"`, an integer, or a finite decimal such as `"0.125"`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseError> {
    let s = s.trim();
    let bad = || ParseError::Rational(String::from(s));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits: String = whole.trim_start_matches(['-', '+']).chars().chain(frac.chars()).collect();
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10u8), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// `"p/q"` (or `"p"` for integers).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        alloc::format!("{}", r.numer())
    } else {
        alloc::format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `digits` significant digits, by exact long division
/// (truncated, never rounded up). Display-only.
pub fn to_decimal(r: &Rational, digits: usize) -> String {
    let mut out = String::new();
    if r.is_zero() {
        return String::from("0");
    }
    if r.is_negative() {
        out.push('-');
    }
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude().clone();
    let (ip, mut rem) = num.div_rem(&den);
    let ip_str = alloc::format!("{}", ip);
    let mut sig = if ip.is_zero() { 0 } else { ip_str.len() };
    out.push_str(&ip_str);
    if rem.is_zero() {
        return out;
    }
    out.push('.');
    let ten = BigUint::from(10u8);
    let mut frac = String::new();
    let mut guard = 0usize;
    while !rem.is_zero() && sig < digits && guard < 4096 {
        rem *= &ten;
        let (d, r2) = rem.div_rem(&den);
        rem = r2;
        let d = d.to_u8().unwrap_or(0);
        if d != 0 || sig > 0 {
            sig += 1;
        }
        let _ = write!(frac, "{}", d);
        guard += 1;
    }
    out.push_str(&frac);
    out
}

/// Floor of a non-negative rational as `u64`, saturating.
pub fn floor_u64(r: &Rational) -> u64 {
    if r.is_negative() {
        return 0;
    }
    r.floor().to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a, I: IntoIterator<Item = &'a Rational>>(it: I) -> BigInt {
    let mut l = BigInt::one();
    for r in it {
        l = l.lcm(r.denom());
    }
    l
}

/// Scale rationals to integers over a common denominator. Returns `(numerators, denominator)`.
pub fn to_common_integers(rs: &[Rational]) -> (Vec<BigUint>, BigUint) {
    let d = common_denominator(rs.iter());
    let nums = rs
        .iter()
        .map(|r| {
            let v = r.numer() * (&d / r.denom());
            match v.sign() {
                Sign::Minus => BigUint::zero(),
                _ => v.magnitude().clone(),
            }
        })
        .collect();
    (nums, d.magnitude().clone())
}

#[cfg(feature = "serde")]
pub mod serde_rational {
    //! Serialize a [`Rational`] as a `"p/q"` string.
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn decimal_truncates() {
        assert_eq!(to_decimal(&ratio(1, 3), 5), "0.33333");
        assert_eq!(to_decimal(&ratio(2, 3), 3), "0.666");
        assert_eq!(to_decimal(&ratio(5, 4), 12), "1.25");
        assert_eq!(to_decimal(&ratio(1, 1024), 2), "0.00097");
    }

    #[test]
    fn pow2_signs() {
        assert_eq!(pow2(-3), ratio(1, 8));
        assert_eq!(pow2(4), int(16));
        assert!(is_dyadic(&ratio(3, 8)));
        assert!(!is_dyadic(&ratio(1, 3)));
    }
}
