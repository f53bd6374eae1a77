//! Nearest-element mapping of a target concentration onto a lattice.
//!
//! [`find_closest_fast`] narrows a bracket by interpolating on element index
//! (false position on `elem[i] - target`), starting from the `k/2^n` bracket
//! around the target. [`find_closest_oracle`] is a plain linear scan kept as
//! an independent reference. Both break exact midpoint ties toward the lower
//! element.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsd::{bs_sequence, fsd_sequence, AccuracyLevel, FsdSequence, SequenceKind};
use crate::rational::{floor_ceil_scaled, signed, Fraction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApproxError {
    #[error("cannot parse target {0:?}: expected a percentage, decimal or fraction")]
    Parse(String),
    #[error("target {0} lies outside [0, 1]")]
    OutOfRange(String),
}

/// Requested concentration factor together with the text it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetCf {
    pub value: Fraction,
    pub original_text: String,
}

impl TargetCf {
    pub fn from_fraction(value: Fraction) -> Result<Self, ApproxError> {
        if value > Fraction::one() {
            return Err(ApproxError::OutOfRange(value.to_string()));
        }
        Ok(TargetCf {
            original_text: value.to_string(),
            value,
        })
    }
}

impl fmt::Display for TargetCf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.original_text)
    }
}

/// Exact value of an unsigned decimal literal such as `44.375` or `.5`.
fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || !digits(frac) {
        return None;
    }
    let mantissa: BigInt = format!("0{int}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(mantissa, scale))
}

/// Parses `"69.3%"`, `"0.693"`, `"9/13"` or `"44.375/64"` into an exact target.
pub fn parse_target(text: &str) -> Result<TargetCf, ApproxError> {
    let trimmed = text.trim();
    let bad = || ApproxError::Parse(text.to_string());
    let value = if let Some(pct) = trimmed.strip_suffix('%') {
        parse_decimal(pct).ok_or_else(bad)? / BigInt::from(100)
    } else if let Some((num, den)) = trimmed.split_once('/') {
        let num = parse_decimal(num).ok_or_else(bad)?;
        let den = parse_decimal(den).ok_or_else(bad)?;
        if den.is_zero() {
            return Err(bad());
        }
        num / den
    } else if trimmed.starts_with('-') {
        return Err(ApproxError::OutOfRange(trimmed.to_string()));
    } else {
        parse_decimal(trimmed).ok_or_else(bad)?
    };
    let value = Fraction::from_ratio(value).map_err(|_| bad())?;
    if value > Fraction::one() {
        return Err(ApproxError::OutOfRange(trimmed.to_string()));
    }
    Ok(TargetCf {
        value,
        original_text: trimmed.to_string(),
    })
}

/// A target, the lattice element chosen for it and the exact signed error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Approximation {
    pub target: TargetCf,
    pub chosen: Fraction,
    /// `chosen - target`.
    #[serde(with = "signed")]
    pub error: BigRational,
    pub lattice_kind: SequenceKind,
    pub n: AccuracyLevel,
    /// Index of `chosen` within the lattice.
    pub position: usize,
    /// True if the fast path gave up and deferred to the linear scan.
    #[serde(default)]
    pub fell_back: bool,
}

impl Approximation {
    fn new(t: &TargetCf, seq: &FsdSequence, position: usize) -> Self {
        let chosen = seq.elems()[position].clone();
        Approximation {
            error: chosen.signed_diff(&t.value),
            target: t.clone(),
            chosen,
            lattice_kind: seq.kind(),
            n: seq.n(),
            position,
            fell_back: false,
        }
    }

    pub fn abs_error(&self) -> BigRational {
        self.error.abs()
    }

    pub fn error_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self.error).unwrap_or(f64::NAN)
    }
}

/// Picks the nearer of `elems[lo]` and `elems[hi]`, assuming `lo < hi` bracket `t`.
fn nearer(elems: &[Fraction], t: &Fraction, lo: usize, hi: usize) -> usize {
    match t.distance(&elems[lo]).cmp(&elems[hi].distance(t)) {
        Ordering::Greater => hi,
        Ordering::Less | Ordering::Equal => lo,
    }
}

/// Linear scan over every element; ties resolve to the lower element.
pub fn find_closest_oracle(t: &TargetCf, seq: &FsdSequence) -> Approximation {
    let mut best = 0;
    let mut best_dist = seq.elems()[0].distance(&t.value);
    for (i, x) in seq.elems().iter().enumerate().skip(1) {
        let d = x.distance(&t.value);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    Approximation::new(t, seq, best)
}

/// Initial bracket from `floor(t·2^n)/2^n` and `ceil(t·2^n)/2^n`.
///
/// Returns `None` when either bound is missing from the lattice.
fn search_range(t: &Fraction, seq: &FsdSequence) -> Option<(usize, usize)> {
    let base = BigInt::from(seq.n().base());
    let (lo, hi) = floor_ceil_scaled(t, &base);
    let reduce = |k: BigInt| {
        let g = k.gcd(&base);
        Fraction::from_ratio(BigRational::new_raw(&k / &g, &base / &g)).ok()
    };
    let lo_pos = seq.position(&reduce(lo)?)?;
    let hi_pos = seq.position(&reduce(hi)?)?;
    Some((lo_pos, hi_pos))
}

/// Binary-search bracket: last index `<= t` and first index `>= t`.
fn binary_bracket(t: &Fraction, elems: &[Fraction]) -> (usize, usize) {
    let above = elems.partition_point(|x| x < t);
    if above < elems.len() && &elems[above] == t {
        (above, above)
    } else {
        (above.saturating_sub(1), above.min(elems.len() - 1))
    }
}

/// Interpolation search over the ordered lattice.
pub fn find_closest_fast(t: &TargetCf, seq: &FsdSequence) -> Approximation {
    let elems = seq.elems();
    let target = &t.value;
    let (mut lo, mut hi) =
        search_range(target, seq).unwrap_or_else(|| binary_bracket(target, elems));

    // Lattices always span [0, 1]; a foreign bracket that misses t is clamped.
    if &elems[lo] > target || &elems[hi] < target {
        (lo, hi) = binary_bracket(target, elems);
    }

    let cap = elems.len();
    for _ in 0..cap {
        if lo == hi || &elems[lo] == target {
            return Approximation::new(t, seq, lo);
        }
        if &elems[hi] == target {
            return Approximation::new(t, seq, hi);
        }
        if hi - lo == 1 {
            return Approximation::new(t, seq, nearer(elems, target, lo, hi));
        }

        // zero crossing of the secant through (lo, y1) and (hi, y2), y1 < 0 < y2
        let y1 = elems[lo].signed_diff(target);
        let y2 = elems[hi].signed_diff(target);
        let x = (BigRational::from_integer(lo.into()) * &y2
            - BigRational::from_integer(hi.into()) * &y1)
            / (&y2 - &y1);
        let k: usize = num_traits::ToPrimitive::to_usize(&x.floor().to_integer())
            .expect("crossing lies inside the bracket")
            .clamp(lo, hi - 1);

        let width = hi - lo;
        if &elems[k] <= target {
            if &elems[k + 1] >= target {
                return Approximation::new(t, seq, nearer(elems, target, k, k + 1));
            }
            lo = k + 1;
        } else {
            if &elems[k - 1] <= target {
                return Approximation::new(t, seq, nearer(elems, target, k - 1, k));
            }
            hi = k;
        }
        assert!(hi - lo < width, "bracket failed to shrink");
    }

    let mut fallback = find_closest_oracle(t, seq);
    fallback.fell_back = true;
    fallback
}

/// BS and FSD approximations of the same target at the same accuracy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeComparison {
    pub bs: Approximation,
    pub fsd: Approximation,
}

impl LatticeComparison {
    /// `|fsd error| <= |bs error|`.
    pub fn fsd_dominates(&self) -> bool {
        self.fsd.abs_error() <= self.bs.abs_error()
    }
}

/// Prebuilt BS and FSD lattices for repeated comparisons at one accuracy.
#[derive(Debug, Clone)]
pub struct Lattices {
    pub bs: FsdSequence,
    pub fsd: FsdSequence,
}

impl Lattices {
    pub fn new(n: AccuracyLevel) -> Self {
        Lattices {
            bs: bs_sequence(n),
            fsd: fsd_sequence(n),
        }
    }

    pub fn compare(&self, t: &TargetCf) -> LatticeComparison {
        let cmp = LatticeComparison {
            bs: find_closest_fast(t, &self.bs),
            fsd: find_closest_fast(t, &self.fsd),
        };
        debug_assert!(cmp.fsd_dominates());
        cmp
    }
}

pub fn compare_lattices(t: &TargetCf, n: AccuracyLevel) -> LatticeComparison {
    Lattices::new(n).compare(t)
}
