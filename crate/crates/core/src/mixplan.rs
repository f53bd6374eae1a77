//! Dilution plans for the doubling inlet ladder.
//!
//! A concentration `p/q` needs `p` units of sample and `q - p` units of
//! buffer. With inlet widths `1x, 2x, ..., 2^{n-1}x` each unit count is just
//! its binary expansion, so the plan is a pair of `n`-bit masks plus the
//! equivalent split-free mix chain.

use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsd::{fsd_sequence, AccuracyLevel, FsdSequence};
use crate::rational::Fraction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("{cf} needs more than {max} units of one fluid at n = {n}; re-approximate at a higher accuracy")]
    NotRepresentable {
        cf: Fraction,
        n: AccuracyLevel,
        max: u64,
    },
    #[error("{cf} is not an element of FSD_{base}")]
    NotInLattice { cf: Fraction, base: u64 },
    #[error("mix tree dispenses no fluid")]
    EmptyTree,
    #[error("mix step {index} has volume {volume}, expected a positive power of two")]
    BadVolume { index: usize, volume: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fluid {
    Sample,
    Buffer,
}

impl fmt::Display for Fluid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fluid::Sample => "sample",
            Fluid::Buffer => "buffer",
        })
    }
}

/// One inflow merged into the running mixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixStep {
    pub fluid: Fluid,
    pub volume: u64,
    /// Bit index `i`; the inflow volume is `2^i`.
    pub position: u32,
}

/// Linear mix chain: every step adds one inflow to the accumulator.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixTree {
    pub steps: Vec<MixStep>,
    pub accum_sample: u64,
    pub accum_total: u64,
}

impl MixTree {
    pub fn push(&mut self, fluid: Fluid, position: u32) {
        let volume = 1u64 << position;
        if fluid == Fluid::Sample {
            self.accum_sample += volume;
        }
        self.accum_total += volume;
        self.steps.push(MixStep {
            fluid,
            volume,
            position,
        });
    }

    /// Every step adds a power-of-two inflow, nothing is discarded, and each
    /// (fluid, bit) pair appears at most once.
    pub fn is_split_free(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        let steps_ok = self.steps.iter().all(|s| {
            s.volume == 1u64.checked_shl(s.position).unwrap_or(0)
                && seen.insert((s.fluid, s.position))
        });
        let (sample, total) = self.steps.iter().fold((0u64, 0u64), |(s, t), step| {
            let s = if step.fluid == Fluid::Sample {
                s + step.volume
            } else {
                s
            };
            (s, t + step.volume)
        });
        steps_ok && sample == self.accum_sample && total == self.accum_total
    }
}

/// Runs the mix chain and returns the resulting concentration.
pub fn replay_tree(tree: &MixTree) -> Result<Fraction, PlanError> {
    let mut sample = 0u64;
    let mut total = 0u64;
    for (index, step) in tree.steps.iter().enumerate() {
        if step.volume == 0 || !step.volume.is_power_of_two() {
            return Err(PlanError::BadVolume {
                index,
                volume: step.volume,
            });
        }
        if step.fluid == Fluid::Sample {
            sample += step.volume;
        }
        total += step.volume;
    }
    if total == 0 {
        return Err(PlanError::EmptyTree);
    }
    Ok(Fraction::from_u64(sample, total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortState {
    On,
    Off,
}

impl PortState {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            PortState::On
        } else {
            PortState::Off
        }
    }

    pub fn is_on(self) -> bool {
        self == PortState::On
    }

    pub fn complement(self) -> Self {
        Self::from_bit(!self.is_on())
    }
}

impl fmt::Display for PortState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_on() { "on" } else { "off" })
    }
}

/// Port states for every inlet, index 0 being the narrowest (leftmost).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InletStates {
    pub sample_mix: Vec<PortState>,
    pub sample_reuse: Vec<PortState>,
    pub buffer_mix: Vec<PortState>,
    pub buffer_reuse: Vec<PortState>,
}

impl InletStates {
    /// States for given mixing-port bit masks; re-use ports are the complements.
    pub fn from_mix_bits(sample: &[bool], buffer: &[bool]) -> Self {
        let states = |bits: &[bool]| {
            bits.iter()
                .map(|&b| PortState::from_bit(b))
                .collect::<Vec<_>>()
        };
        let complement = |v: &[PortState]| v.iter().map(|s| s.complement()).collect::<Vec<_>>();
        let sample_mix = states(sample);
        let buffer_mix = states(buffer);
        InletStates {
            sample_reuse: complement(&sample_mix),
            buffer_reuse: complement(&buffer_mix),
            sample_mix,
            buffer_mix,
        }
    }

    /// Inlets per fluid.
    pub fn width(&self) -> usize {
        self.sample_mix.len()
    }

    pub fn is_complementary(&self) -> bool {
        let pairs = |mix: &[PortState], reuse: &[PortState]| {
            mix.len() == reuse.len() && mix.iter().zip(reuse).all(|(m, r)| m.complement() == *r)
        };
        self.sample_mix.len() == self.buffer_mix.len()
            && pairs(&self.sample_mix, &self.sample_reuse)
            && pairs(&self.buffer_mix, &self.buffer_reuse)
    }
}

/// Weighted sum of open ports, inlet `i` carrying `2^i` units.
pub fn decode(ports: &[PortState]) -> u64 {
    ports
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_on())
        .map(|(i, _)| 1u64 << i)
        .sum()
}

fn to_bits(units: u64, n: AccuracyLevel) -> Vec<bool> {
    (0..n.get()).map(|i| units >> i & 1 == 1).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DilutionPlan {
    pub cf: Fraction,
    pub n: AccuracyLevel,
    pub sample_units: u64,
    pub buffer_units: u64,
    /// LSB first: index 0 is the narrowest inlet.
    pub sample_bits: Vec<bool>,
    pub buffer_bits: Vec<bool>,
    pub tree: MixTree,
}

impl DilutionPlan {
    pub fn total_units(&self) -> u64 {
        self.sample_units + self.buffer_units
    }
}

/// `(sample units, buffer units)` for `cf`, with the pure endpoints mapped
/// to a single unit of one fluid.
fn unit_counts(cf: &Fraction, n: AccuracyLevel) -> Result<(u64, u64), PlanError> {
    let unrepresentable = || PlanError::NotRepresentable {
        cf: cf.clone(),
        n,
        max: n.max_units(),
    };
    let sample = cf.numer().to_u64().ok_or_else(unrepresentable)?;
    let buffer = cf.complement_units().to_u64().ok_or_else(unrepresentable)?;
    if sample > n.max_units() || buffer > n.max_units() {
        return Err(unrepresentable());
    }
    Ok((sample, buffer))
}

/// Plans `cf`, which must belong to `lattice` (normally `FSD_{2^n}`).
pub fn make_plan_in(cf: &Fraction, lattice: &FsdSequence) -> Result<DilutionPlan, PlanError> {
    let n = lattice.n();
    let (sample_units, buffer_units) = unit_counts(cf, n)?;
    if !lattice.contains(cf) {
        return Err(PlanError::NotInLattice {
            cf: cf.clone(),
            base: n.base(),
        });
    }
    let sample_bits = to_bits(sample_units, n);
    let buffer_bits = to_bits(buffer_units, n);

    // right-to-left bit scan, sample before buffer at each position
    let mut tree = MixTree::default();
    for i in 0..n.get() {
        if sample_bits[i as usize] {
            tree.push(Fluid::Sample, i);
        }
        if buffer_bits[i as usize] {
            tree.push(Fluid::Buffer, i);
        }
    }
    debug_assert_eq!(tree.accum_sample, sample_units);
    debug_assert_eq!(tree.accum_total, sample_units + buffer_units);

    Ok(DilutionPlan {
        cf: cf.clone(),
        n,
        sample_units,
        buffer_units,
        sample_bits,
        buffer_bits,
        tree,
    })
}

/// Plans `cf` against a freshly built `FSD_{2^n}`.
pub fn make_plan(cf: &Fraction, n: AccuracyLevel) -> Result<DilutionPlan, PlanError> {
    // cheap rejection before building the lattice
    unit_counts(cf, n)?;
    make_plan_in(cf, &fsd_sequence(n))
}

pub fn inlet_states(plan: &DilutionPlan) -> InletStates {
    InletStates::from_mix_bits(&plan.sample_bits, &plan.buffer_bits)
}

/// `a` units of sample with `b` units of buffer, delivering `a + b` units per unit time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThroughputOption {
    pub a: u64,
    pub b: u64,
    pub rate: u64,
}

/// All integer multiples of the reduced injection for `cf` that fit the ladder, by rate.
pub fn throughput_options(
    cf: &Fraction,
    n: AccuracyLevel,
) -> Result<Vec<ThroughputOption>, PlanError> {
    let (a, b) = unit_counts(cf, n)?;
    let max = n.max_units();
    let largest = a.max(b);
    Ok((1..=max / largest)
        .map(|k| ThroughputOption {
            a: k * a,
            b: k * b,
            rate: k * (a + b),
        })
        .collect())
}
