//! Finite distributions with exact rational masses.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::error::DistError;
use crate::logcmp::compare_prob_to_threshold;
use crate::rational::{format_rational, Rational};
use crate::space::{BlockSpace, Coords};

/// A distribution on an explicit, ordered domain. Zero-mass elements may be
/// part of the domain; masses are non-negative and sum to exactly 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution<T: Ord> {
    masses: BTreeMap<T, Rational>,
}

impl<T: Ord + Clone> Distribution<T> {
    pub fn new<I: IntoIterator<Item = (T, Rational)>>(it: I) -> Result<Self, DistError> {
        let mut masses: BTreeMap<T, Rational> = BTreeMap::new();
        for (k, v) in it {
            if v.is_negative() {
                return Err(DistError::NotNormalized(format_rational(&v)));
            }
            *masses.entry(k).or_insert_with(Rational::zero) += v;
        }
        if masses.is_empty() {
            return Err(DistError::EmptyDomain);
        }
        let total: Rational = masses.values().sum();
        if !total.is_one() {
            return Err(DistError::NotNormalized(format_rational(&total)));
        }
        Ok(Distribution { masses })
    }

    /// Normalizes non-negative weights. Fails if all weights are zero.
    pub fn from_weights<I: IntoIterator<Item = (T, Rational)>>(it: I) -> Result<Self, DistError> {
        let raw: Vec<(T, Rational)> = it.into_iter().collect();
        if raw.is_empty() {
            return Err(DistError::EmptyDomain);
        }
        let total: Rational = raw.iter().map(|(_, w)| w.clone()).sum();
        if !total.is_positive() || raw.iter().any(|(_, w)| w.is_negative()) {
            return Err(DistError::NullEvent);
        }
        Self::new(raw.into_iter().map(|(k, w)| (k, w / &total)))
    }

    pub fn uniform<I: IntoIterator<Item = T>>(it: I) -> Result<Self, DistError> {
        Self::from_weights(it.into_iter().map(|k| (k, Rational::one())))
    }

    pub fn point(x: T) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(x, Rational::one());
        Distribution { masses }
    }

    pub fn mass(&self, x: &T) -> Rational {
        self.masses.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn domain(&self) -> impl Iterator<Item = &T> {
        self.masses.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rational)> {
        self.masses.iter()
    }

    /// Elements of positive mass, in domain order.
    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.masses.iter().filter(|(_, m)| m.is_positive()).map(|(k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn max_prob(&self) -> Rational {
        self.masses.values().max().cloned().unwrap_or_else(Rational::zero)
    }

    /// First element (in domain order) of maximum mass.
    pub fn argmax(&self) -> &T {
        let m = self.max_prob();
        self.masses.iter().find(|(_, v)| **v == m).map(|(k, _)| k).expect("non-empty")
    }

    pub fn prob<F: Fn(&T) -> bool>(&self, event: F) -> Rational {
        self.masses.iter().filter(|(k, _)| event(k)).map(|(_, v)| v.clone()).sum()
    }

    /// Renormalized restriction to the event. The domain shrinks to the event.
    pub fn condition<F: Fn(&T) -> bool>(&self, event: F) -> Result<Self, DistError> {
        let p = self.prob(&event);
        if p.is_zero() {
            return Err(DistError::NullEvent);
        }
        Ok(Distribution {
            masses: self.masses.iter().filter(|(k, _)| event(k)).map(|(k, v)| (k.clone(), v / &p)).collect(),
        })
    }

    /// Push-forward along `f`.
    pub fn map<U: Ord + Clone, F: Fn(&T) -> U>(&self, f: F) -> Distribution<U> {
        let mut masses: BTreeMap<U, Rational> = BTreeMap::new();
        for (k, v) in &self.masses {
            *masses.entry(f(k)).or_insert_with(Rational::zero) += v;
        }
        Distribution { masses }
    }

    /// Extend both distributions with zero mass to the union of their domains.
    pub fn align(&self, other: &Self) -> (Self, Self) {
        let mut a = self.clone();
        let mut b = other.clone();
        for k in other.masses.keys() {
            a.masses.entry(k.clone()).or_insert_with(Rational::zero);
        }
        for k in self.masses.keys() {
            b.masses.entry(k.clone()).or_insert_with(Rational::zero);
        }
        (a, b)
    }

    /// Total variation distance. The domains must coincide (see [`Distribution::align`]).
    pub fn statistical_distance(&self, other: &Self) -> Result<Rational, DistError> {
        if self.masses.len() != other.masses.len() || self.masses.keys().zip(other.masses.keys()).any(|(a, b)| a != b) {
            return Err(DistError::DomainMismatch);
        }
        let l1: Rational = self.masses.values().zip(other.masses.values()).map(|(a, b)| (a - b).abs()).sum();
        Ok(l1 / Rational::from_integer(2.into()))
    }

    /// `H∞ >= q`, i.e. every mass is at most `2^-q`.
    pub fn min_entropy_at_least(&self, q: &Rational) -> bool {
        compare_prob_to_threshold(&self.max_prob(), q) != Ordering::Greater
    }

    /// Drop zero-mass elements from the domain.
    pub fn trimmed(&self) -> Self {
        Distribution { masses: self.masses.iter().filter(|(_, v)| v.is_positive()).map(|(k, v)| (k.clone(), v.clone())).collect() }
    }
}

pub fn min_entropy_at_least<T: Ord + Clone>(d: &Distribution<T>, q: &Rational) -> bool {
    d.min_entropy_at_least(q)
}

pub fn statistical_distance<T: Ord + Clone>(a: &Distribution<T>, b: &Distribution<T>) -> Result<Rational, DistError> {
    a.statistical_distance(b)
}

/// `|Pr[V=0] - Pr[V=1]|`.
pub fn bias(d: &Distribution<bool>) -> Rational {
    (d.mass(&false) - d.mass(&true)).abs()
}

/// A distribution over `Λ^n` (points encoded as in [`BlockSpace`]).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDist {
    pub space: BlockSpace,
    pub dist: Distribution<u32>,
}

impl BlockDist {
    pub fn new(space: BlockSpace, dist: Distribution<u32>) -> Result<Self, DistError> {
        if dist.domain().any(|&x| !space.contains(x)) {
            return Err(DistError::OutOfRange);
        }
        Ok(BlockDist { space, dist })
    }

    pub fn uniform_on(space: BlockSpace, points: &[u32]) -> Result<Self, DistError> {
        Self::new(space, Distribution::uniform(points.iter().copied())?)
    }

    pub fn uniform(space: BlockSpace) -> Self {
        BlockDist { space, dist: Distribution::uniform(space.points()).expect("non-empty space") }
    }

    /// Marginal on the coordinates `coords`, as a distribution on `Λ^|coords|`.
    pub fn project(&self, coords: Coords) -> BlockDist {
        let s = self.space;
        BlockDist { space: s.sub(coords), dist: self.dist.map(|&x| s.project(x, coords)) }
    }

    pub fn condition<F: Fn(u32) -> bool>(&self, event: F) -> Result<BlockDist, DistError> {
        Ok(BlockDist { space: self.space, dist: self.dist.condition(|&x| event(x))? })
    }

    pub fn max_prob(&self) -> Rational {
        self.dist.max_prob()
    }
}

/// Marginal of `d` on `coords`.
pub fn project(d: &BlockDist, coords: Coords) -> BlockDist {
    d.project(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn condition_examples() {
        let d = Distribution::uniform([0u32, 1, 2, 3]).unwrap();
        let c = d.condition(|&x| x < 2).unwrap();
        assert_eq!(c, Distribution::uniform([0u32, 1]).unwrap());
        let d = Distribution::new([('a', ratio(1, 2)), ('b', ratio(1, 4)), ('c', ratio(1, 4))]).unwrap();
        let c = d.condition(|&k| k != 'a').unwrap();
        assert_eq!(c.mass(&'b'), ratio(1, 2));
        assert_eq!(d.condition(|_| false), Err(DistError::NullEvent));
        let p = Distribution::point(7u32);
        assert_eq!(p.condition(|_| true).unwrap(), p);
    }

    #[test]
    fn projection_examples() {
        let s = BlockSpace::new(2, 1);
        let d = BlockDist::new(s, Distribution::new([(0b00u32, ratio(1, 2)), (0b01, ratio(1, 2))]).unwrap()).unwrap();
        let p = d.project(Coords::singleton(0));
        assert_eq!(p.dist, Distribution::point(0));
        assert_eq!(d.project(Coords::full(2)), d);
        let u = BlockDist::uniform(s).project(Coords::singleton(0));
        assert_eq!(u.dist, Distribution::uniform([0u32, 1]).unwrap());
    }

    #[test]
    fn distance_and_bias() {
        let a = Distribution::new([(0u8, ratio(3, 4)), (1, ratio(1, 4))]).unwrap();
        let b = Distribution::uniform([0u8, 1]).unwrap();
        assert_eq!(a.statistical_distance(&b).unwrap(), ratio(1, 4));
        assert_eq!(a.statistical_distance(&a).unwrap(), int(0));
        let (p, q) = Distribution::point(0u8).align(&Distribution::point(1u8));
        assert_eq!(p.statistical_distance(&q).unwrap(), int(1));
        assert_eq!(Distribution::point(0u8).statistical_distance(&Distribution::point(1u8)), Err(DistError::DomainMismatch));
        let v = Distribution::new([(false, ratio(3, 4)), (true, ratio(1, 4))]).unwrap();
        assert_eq!(bias(&v), ratio(1, 2));
        assert_eq!(bias(&Distribution::uniform([false, true]).unwrap()), int(0));
        assert_eq!(bias(&Distribution::point(true)), int(1));
    }

    #[test]
    fn min_entropy_examples() {
        assert!(Distribution::uniform(0u8..4).unwrap().min_entropy_at_least(&int(2)));
        assert!(!Distribution::point(0u8).min_entropy_at_least(&ratio(1, 2)));
        // 1/3 <= 2^(-3/2) because 1/9 < 1/8
        assert!(Distribution::uniform(0u8..3).unwrap().min_entropy_at_least(&ratio(3, 2)));
        assert!(!Distribution::uniform(0u8..3).unwrap().min_entropy_at_least(&ratio(8, 5)));
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(Distribution::new([(0u8, ratio(1, 2))]).is_err());
        assert!(Distribution::new([(0u8, ratio(3, 2)), (1, ratio(-1, 2))]).is_err());
        assert!(Distribution::<u8>::new([]).is_err());
    }
}
