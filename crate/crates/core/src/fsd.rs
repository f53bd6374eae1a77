//! Concentration lattices for an `n`-bit inlet ladder.
//!
//! Three lattices are built here:
//!
//! * `BS_n`, the binarized lattice `{k / 2^n}` produced by repeated 1:1 mixing;
//! * `RF_{2^n}`, every ratio `a / (a + b)` with `0 <= a, b <= 2^n - 1`, i.e.
//!   exactly what the doubling inlet ladder can dispense, obtained by filtering
//!   a classical Farey sequence;
//! * `FSD_{2^n}`, which keeps all of `BS_n` and adds, inside each half of every
//!   BS gap, the `RF` element with the smallest numerator (least sample).

use std::fmt;
use std::io;

use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{FareyTerms, Fraction};

#[derive(Debug, Error)]
pub enum FsdError {
    #[error("accuracy level {n} outside supported range 1..={ceiling}")]
    AccuracyOutOfRange { n: u32, ceiling: u32 },
    #[error("sequence must be strictly increasing within [0, 1]")]
    Malformed,
    #[error("expected a {expected} sequence, got {actual}")]
    WrongKind {
        expected: SequenceKind,
        actual: SequenceKind,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Number of sample inlets (equivalently buffer inlets) of the diluter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct AccuracyLevel(u32);

impl AccuracyLevel {
    pub const DEFAULT_CEILING: u32 = 12;
    pub const MAX_CEILING: u32 = 16;

    pub fn new(n: u32) -> Result<Self, FsdError> {
        Self::with_ceiling(n, Self::DEFAULT_CEILING)
    }

    /// Accepts `1..=ceiling`, where the ceiling itself is clamped to 16.
    pub fn with_ceiling(n: u32, ceiling: u32) -> Result<Self, FsdError> {
        let ceiling = ceiling.min(Self::MAX_CEILING);
        if (1..=ceiling).contains(&n) {
            Ok(AccuracyLevel(n))
        } else {
            Err(FsdError::AccuracyOutOfRange { n, ceiling })
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `2^n`.
    pub fn base(self) -> u64 {
        1 << self.0
    }

    /// `2^n - 1`, the most units one fluid can contribute.
    pub fn max_units(self) -> u64 {
        self.base() - 1
    }

    /// Order of the Farey sequence that contains every `RF_{2^n}` element.
    pub fn farey_order(self) -> u64 {
        // 2^{n+1} - 3 is the largest reduced denominator for n >= 2; n = 1 needs 1/2.
        (2 * self.base() - 3).max(2)
    }
}

impl TryFrom<u32> for AccuracyLevel {
    type Error = FsdError;

    fn try_from(n: u32) -> Result<Self, FsdError> {
        AccuracyLevel::with_ceiling(n, AccuracyLevel::MAX_CEILING)
    }
}

impl From<AccuracyLevel> for u32 {
    fn from(n: AccuracyLevel) -> u32 {
        n.0
    }
}

impl fmt::Display for AccuracyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Bs,
    Rf,
    Fsd,
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequenceKind::Bs => "bs",
            SequenceKind::Rf => "rf",
            SequenceKind::Fsd => "fsd",
        })
    }
}

impl std::str::FromStr for SequenceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bs" => Ok(SequenceKind::Bs),
            "rf" => Ok(SequenceKind::Rf),
            "fsd" => Ok(SequenceKind::Fsd),
            other => Err(format!("unknown sequence kind {other:?}")),
        }
    }
}

/// Ordered concentration lattice; endpoints are always `0` and `1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsdSequence {
    kind: SequenceKind,
    n: AccuracyLevel,
    elems: Vec<Fraction>,
}

impl FsdSequence {
    /// Wraps an arbitrary lattice, checking only that it is strictly
    /// increasing inside `[0, 1]` with both endpoints present.
    pub fn from_elems(
        kind: SequenceKind,
        n: AccuracyLevel,
        elems: Vec<Fraction>,
    ) -> Result<Self, FsdError> {
        let ordered = elems.windows(2).all(|w| w[0] < w[1]);
        let ends = elems.first().is_some_and(Fraction::is_zero)
            && elems.last().is_some_and(Fraction::is_one);
        if !(ordered && ends) {
            return Err(FsdError::Malformed);
        }
        Ok(FsdSequence { kind, n, elems })
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    pub fn n(&self) -> AccuracyLevel {
        self.n
    }

    pub fn elems(&self) -> &[Fraction] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Index of `x`, if present.
    pub fn position(&self, x: &Fraction) -> Option<usize> {
        self.elems.binary_search(x).ok()
    }

    pub fn contains(&self, x: &Fraction) -> bool {
        self.position(x).is_some()
    }

    /// Largest difference between adjacent elements.
    pub fn max_gap(&self) -> Fraction {
        self.elems
            .windows(2)
            .map(|w| w[1].distance(&w[0]))
            .max()
            .unwrap_or_else(Fraction::zero)
    }

    /// CSV with columns `index,numerator,denominator,decimal,kind`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), FsdError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "numerator", "denominator", "decimal", "kind"])?;
        for (i, x) in self.elems.iter().enumerate() {
            w.write_record([
                i.to_string(),
                x.numer().to_string(),
                x.denom().to_string(),
                format!("{:.12}", x.to_f64()),
                self.kind.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `{0, 1/2^n, ..., 2^n/2^n}` in lowest terms.
pub fn bs_sequence(n: AccuracyLevel) -> FsdSequence {
    let base = n.base();
    let elems = (0..=base).map(|k| Fraction::from_u64(k, base)).collect();
    FsdSequence {
        kind: SequenceKind::Bs,
        n,
        elems,
    }
}

/// Ladder-realizable ratios, taken as the subset of `F_{2^{n+1}-3}` whose
/// interior elements `p/q` satisfy `0 < p < 2^n` and `q - p < 2^n`.
pub fn reduced_farey(n: AccuracyLevel) -> FsdSequence {
    let base = n.base();
    let elems: Vec<Fraction> = FareyTerms::new(n.farey_order())
        .expect("order >= 2")
        .filter(|&(p, q)| p == q || p == 0 || (p < base && q - p < base))
        .map(|(p, q)| Fraction::from_coprime_u64(p, q))
        .collect();
    let seq = FsdSequence {
        kind: SequenceKind::Rf,
        n,
        elems,
    };
    debug_assert!(n.get() > 6 || seq.elems == reduced_farey_by_pairs(n).elems);
    seq
}

/// `{a / (a + b) : 0 <= a, b <= 2^n - 1, a + b > 0}`, enumerated directly.
pub fn reduced_farey_by_pairs(n: AccuracyLevel) -> FsdSequence {
    let max = n.max_units();
    let mut elems: Vec<Fraction> = (0..=max)
        .flat_map(|a| (0..=max).map(move |b| (a, b)))
        .filter(|&(a, b)| a + b > 0 && a.gcd(&b) == 1)
        .map(|(a, b)| Fraction::from_coprime_u64(a, a + b))
        .collect();
    elems.sort();
    FsdSequence {
        kind: SequenceKind::Rf,
        n,
        elems,
    }
}

/// Smallest-numerator element strictly between `lo` and `hi` in a sorted
/// slice; ties go to the smaller denominator.
fn min_numerator_between<'a>(
    sorted: &'a [Fraction],
    lo: &Fraction,
    hi: &Fraction,
) -> Option<&'a Fraction> {
    let start = sorted.partition_point(|x| x <= lo);
    let end = sorted.partition_point(|x| x < hi);
    sorted[start..end.max(start)]
        .iter()
        .min_by(|a, b| (a.numer(), a.denom()).cmp(&(b.numer(), b.denom())))
}

/// Builds `FSD_{2^n}`.
///
/// Every gap `(y/2^n, (y+1)/2^n)` of `BS_n` is split at its midpoint; each
/// open half contributes its minimum-numerator `RF` element if it has one.
/// The outermost halves next to 0 and 1 are empty, which is what makes the
/// count come out to `3(2^n - 1)`.
pub fn fsd_sequence(n: AccuracyLevel) -> FsdSequence {
    let rf = reduced_farey(n);
    let bs = bs_sequence(n);
    let mut elems = bs.elems.clone();
    for gap in bs.elems.windows(2) {
        let mid = gap[0].midpoint(&gap[1]);
        for (lo, hi) in [(&gap[0], &mid), (&mid, &gap[1])] {
            if let Some(x) = min_numerator_between(&rf.elems, lo, hi) {
                elems.push(x.clone());
            }
        }
    }
    elems.sort();
    elems.dedup();
    FsdSequence {
        kind: SequenceKind::Fsd,
        n,
        elems,
    }
}

/// Builds several lattices in parallel, preserving input order.
pub fn fsd_sequences(levels: &[AccuracyLevel]) -> Vec<FsdSequence> {
    levels.par_iter().map(|&n| fsd_sequence(n)).collect()
}

/// Builds the lattice of the requested kind.
pub fn sequence(kind: SequenceKind, n: AccuracyLevel) -> FsdSequence {
    match kind {
        SequenceKind::Bs => bs_sequence(n),
        SequenceKind::Rf => reduced_farey(n),
        SequenceKind::Fsd => fsd_sequence(n),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TheoremCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub n: AccuracyLevel,
    pub cardinality: usize,
    pub bs_cardinality: usize,
    /// `3(2^n - 1)`, reported for comparison only.
    pub closed_form: u64,
    pub max_gap: Fraction,
    pub checks: Vec<TheoremCheck>,
}

impl TheoremReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&TheoremCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn closed_form_matches(&self) -> bool {
        self.cardinality as u64 == self.closed_form
    }
}

pub const CHECK_NUMERATOR_BOUNDS: &str = "numerator bounds";
pub const CHECK_CARDINALITY: &str = "larger than BS";
pub const CHECK_SUPERSET: &str = "contains BS";

/// Checks the numerator bounds, cardinality, and superset properties of an FSD lattice.
pub fn verify_theorems(seq: &FsdSequence) -> Result<TheoremReport, FsdError> {
    if seq.kind != SequenceKind::Fsd {
        return Err(FsdError::WrongKind {
            expected: SequenceKind::Fsd,
            actual: seq.kind,
        });
    }
    let n = seq.n;
    let base = BigInt::from(n.base());
    let interior = seq.elems.iter().filter(|x| !x.is_zero() && !x.is_one());
    let offenders: Vec<String> = interior
        .filter(|x| {
            let p = x.numer();
            let diff = x.complement_units();
            !(p > &BigInt::from(0) && p < &base && diff > BigInt::from(0) && diff < base)
        })
        .map(|x| x.to_string())
        .collect();
    let t1 = TheoremCheck {
        name: CHECK_NUMERATOR_BOUNDS,
        passed: offenders.is_empty(),
        detail: if offenders.is_empty() {
            format!("all interior elements have 0 < p < {base} and 0 < q - p < {base}")
        } else {
            format!("out of bounds: {}", offenders.join(", "))
        },
    };

    let bs = bs_sequence(n);
    let t2 = TheoremCheck {
        name: CHECK_CARDINALITY,
        passed: seq.len() > bs.len(),
        detail: format!("|FSD| = {}, |BS| = {}", seq.len(), bs.len()),
    };

    let missing: Vec<String> = bs
        .elems
        .iter()
        .filter(|x| !seq.contains(x))
        .map(|x| x.to_string())
        .collect();
    let t3 = TheoremCheck {
        name: CHECK_SUPERSET,
        passed: missing.is_empty(),
        detail: if missing.is_empty() {
            "every BS element present".to_string()
        } else {
            format!("missing: {}", missing.join(", "))
        },
    };

    Ok(TheoremReport {
        n,
        cardinality: seq.len(),
        bs_cardinality: bs.len(),
        closed_form: 3 * n.max_units(),
        max_gap: seq.max_gap(),
        checks: vec![t1, t2, t3],
    })
}
