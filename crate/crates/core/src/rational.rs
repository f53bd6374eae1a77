//! Exact non-negative rationals and classical Farey sequences.
//!
//! [`Fraction`] is the value type every concentration factor travels in. It is
//! always stored in lowest terms with a positive denominator, so structural
//! equality coincides with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("negative value {0}")]
    Negative(String),
    #[error("cannot parse fraction from {0:?}")]
    Parse(String),
    #[error("Farey order must be at least 1")]
    ZeroOrder,
}

/// Irreducible, non-negative rational number.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fraction(BigRational);

impl Fraction {
    pub fn zero() -> Self {
        Fraction(BigRational::zero())
    }

    pub fn one() -> Self {
        Fraction(BigRational::one())
    }

    /// Builds `num/den` from machine integers, reducing as needed.
    ///
    /// Panics if `den == 0`; use [`make_fraction`] for checked construction.
    pub fn from_u64(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        Fraction(BigRational::new(num.into(), den.into()))
    }

    /// Wraps a pair already known to be coprime, skipping the gcd.
    pub(crate) fn from_coprime_u64(num: u64, den: u64) -> Self {
        debug_assert!(den != 0 && num.gcd(&den) == 1);
        Fraction(BigRational::new_raw(num.into(), den.into()))
    }

    /// Accepts any non-negative rational.
    pub fn from_ratio(r: BigRational) -> Result<Self, RationalError> {
        if r.is_negative() {
            return Err(RationalError::Negative(r.to_string()));
        }
        Ok(Fraction(r))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// `(numerator, denominator)` as machine integers, if they fit.
    pub fn to_u64_pair(&self) -> Option<(u64, u64)> {
        Some((self.numer().to_u64()?, self.denom().to_u64()?))
    }

    /// Denominator minus numerator: the buffer share of a concentration factor.
    pub fn complement_units(&self) -> BigInt {
        self.denom() - self.numer()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Signed difference `self - other`.
    pub fn signed_diff(&self, other: &Fraction) -> BigRational {
        &self.0 - &other.0
    }

    /// `|self - other|` as a fraction.
    pub fn distance(&self, other: &Fraction) -> Fraction {
        Fraction((&self.0 - &other.0).abs())
    }

    /// Midpoint of `self` and `other`.
    pub fn midpoint(&self, other: &Fraction) -> Fraction {
        Fraction((&self.0 + &other.0) / BigInt::from(2))
    }
}

/// Checked constructor: rejects zero denominators and negative values.
pub fn make_fraction(
    num: impl Into<BigInt>,
    den: impl Into<BigInt>,
) -> Result<Fraction, RationalError> {
    let (num, den) = (num.into(), den.into());
    if den.is_zero() {
        return Err(RationalError::ZeroDenominator);
    }
    Fraction::from_ratio(BigRational::new(num, den))
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses the canonical `p/q` form (or a bare integer).
impl FromStr for Fraction {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RationalError::Parse(s.to_string());
        let (num, den) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        make_fraction(num, den)
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Signed exact rational rendered as `p/q`, used for approximation errors.
pub mod signed {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(&format_args!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<BigRational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }

    pub fn parse(s: &str) -> Option<BigRational> {
        let (n, d) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        (!d.is_zero()).then(|| BigRational::new(n, d))
    }
}

/// Farey sequence of a given order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FareySeq {
    pub order: u64,
    pub elems: Vec<Fraction>,
}

impl FareySeq {
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }
}

/// Streams the terms of `F_m` in ascending order as coprime `(p, q)` pairs
/// using the next-term recurrence.
#[derive(Debug, Clone)]
pub struct FareyTerms {
    order: u64,
    cur: (u64, u64),
    next: Option<(u64, u64)>,
    done: bool,
}

impl FareyTerms {
    pub fn new(order: u64) -> Result<Self, RationalError> {
        if order == 0 {
            return Err(RationalError::ZeroOrder);
        }
        Ok(FareyTerms {
            order,
            cur: (0, 1),
            next: Some((1, order)),
            done: false,
        })
    }
}

impl Iterator for FareyTerms {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        if self.done {
            return None;
        }
        let out = self.cur;
        match self.next {
            Some((c, d)) => {
                let (a, b) = self.cur;
                let k = (self.order + b) / d;
                self.next = if c == 1 && d == 1 {
                    None
                } else {
                    Some((k * c - a, k * d - b))
                };
                self.cur = (c, d);
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// All irreducible fractions in `[0, 1]` with denominator at most `m`, ascending.
pub fn farey_sequence(m: u64) -> Result<FareySeq, RationalError> {
    let elems = FareyTerms::new(m)?
        .map(|(p, q)| Fraction::from_coprime_u64(p, q))
        .collect();
    Ok(FareySeq { order: m, elems })
}

/// Same sequence as [`farey_sequence`], built by enumerating every `p/q` and sorting.
pub fn farey_by_enumeration(m: u64) -> Result<FareySeq, RationalError> {
    if m == 0 {
        return Err(RationalError::ZeroOrder);
    }
    let mut elems: Vec<Fraction> = (1..=m)
        .flat_map(|q| (0..=q).filter(move |p| p.gcd(&q) == 1).map(move |p| (p, q)))
        .map(|(p, q)| Fraction::from_coprime_u64(p, q))
        .collect();
    elems.sort();
    Ok(FareySeq { order: m, elems })
}

/// True iff every adjacent pair `p/q < r/s` satisfies `q·r − p·s = 1`.
pub fn farey_neighbors_check(elems: &[Fraction]) -> bool {
    elems.windows(2).all(|w| {
        let (p, q) = (w[0].numer(), w[0].denom());
        let (r, s) = (w[1].numer(), w[1].denom());
        q * r - p * s == BigInt::one()
    })
}

/// Exact floor and ceiling of `x · scale` for a non-negative fraction.
pub(crate) fn floor_ceil_scaled(x: &Fraction, scale: &BigInt) -> (BigInt, BigInt) {
    let (q, r) = (x.numer() * scale).div_rem(x.denom());
    if r.is_zero() {
        (q.clone(), q)
    } else {
        let c = &q + 1;
        (q, c)
    }
}

impl PartialEq<BigRational> for Fraction {
    fn eq(&self, other: &BigRational) -> bool {
        &self.0 == other
    }
}

impl PartialOrd<BigRational> for Fraction {
    fn partial_cmp(&self, other: &BigRational) -> Option<Ordering> {
        Some(self.0.cmp(other))
    }
}
