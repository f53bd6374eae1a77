//! Algebraic hydrodynamic checks for the diluter.
//!
//! The characteristic length used for the Reynolds number of each segment is
//! the hydraulic diameter `2wh / (w + h)` of its rectangular cross-section,
//! unless [`ChannelSpec::characteristic_length`] overrides it. Flux is tracked
//! in exact unit multiples (one unit = flow through a `1x` inlet at speed `u`).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsd::AccuracyLevel;
use crate::mixplan::{decode, InletStates};
use crate::rational::Fraction;

/// Upper bound (exclusive) for laminar flow.
pub const LAMINAR_LIMIT: f64 = 2000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HydroError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("inlet states describe {states} inlets per fluid but the channel has {channel}")]
    MismatchedWidth { states: usize, channel: u32 },
}

fn positive(name: &'static str, value: f64) -> Result<f64, HydroError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(HydroError::NonPositive { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidProps {
    /// kg/m³
    pub density: f64,
    /// Pa·s
    pub dynamic_viscosity: f64,
}

impl FluidProps {
    pub fn new(density: f64, dynamic_viscosity: f64) -> Result<Self, HydroError> {
        Ok(FluidProps {
            density: positive("density", density)?,
            dynamic_viscosity: positive("dynamic viscosity", dynamic_viscosity)?,
        })
    }

    /// Water at 20 °C.
    pub fn water() -> Self {
        FluidProps {
            density: 998.0,
            dynamic_viscosity: 1.002e-3,
        }
    }
}

impl Default for FluidProps {
    fn default() -> Self {
        Self::water()
    }
}

/// `ρ·u·l/μ`.
pub fn reynolds(fluid: &FluidProps, speed: f64, length: f64) -> Result<f64, HydroError> {
    let rho = positive("density", fluid.density)?;
    let mu = positive("dynamic viscosity", fluid.dynamic_viscosity)?;
    let u = positive("speed", speed)?;
    let l = positive("length", length)?;
    Ok(rho * u * l / mu)
}

/// Channel geometry shared by every segment; lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub n: AccuracyLevel,
    pub height: f64,
    /// Width `x` of the narrowest inlet.
    pub unit_width: f64,
    /// Injection speed `u`, held constant along the network (m/s).
    pub injection_speed: f64,
    /// Fixed characteristic length; `None` uses each segment's hydraulic diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characteristic_length: Option<f64>,
}

impl ChannelSpec {
    pub const DEFAULT_HEIGHT: f64 = 25e-6;
    pub const DEFAULT_UNIT_WIDTH: f64 = 50e-6;
    pub const DEFAULT_SPEED: f64 = 1e-3;

    pub fn new(n: AccuracyLevel) -> Self {
        ChannelSpec {
            n,
            height: Self::DEFAULT_HEIGHT,
            unit_width: Self::DEFAULT_UNIT_WIDTH,
            injection_speed: Self::DEFAULT_SPEED,
            characteristic_length: None,
        }
    }

    pub fn validate(&self) -> Result<(), HydroError> {
        positive("height", self.height)?;
        positive("unit width", self.unit_width)?;
        positive("injection speed", self.injection_speed)?;
        if let Some(l) = self.characteristic_length {
            positive("characteristic length", l)?;
        }
        Ok(())
    }

    /// `[x, 2x, ..., 2^{n-1}x]`, identical for sample and buffer.
    pub fn inlet_widths(&self) -> Vec<f64> {
        (0..self.n.get())
            .map(|i| self.unit_width * (1u64 << i) as f64)
            .collect()
    }

    /// Characteristic length of a segment `width` wide.
    pub fn length_for(&self, width: f64) -> f64 {
        self.characteristic_length
            .unwrap_or_else(|| hydraulic_diameter(width, self.height))
    }

    /// Volumetric flow through a `1x` inlet (m³/s).
    pub fn unit_flux(&self) -> f64 {
        self.unit_width * self.height * self.injection_speed
    }
}

pub fn hydraulic_diameter(width: f64, height: f64) -> f64 {
    2.0 * width * height / (width + height)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "segment", rename_all = "snake_case")]
pub enum Segment {
    SampleInlet {
        index: u32,
    },
    BufferInlet {
        index: u32,
    },
    /// Mixing channel downstream of the given junction (0-based).
    MixingChannel {
        junction: u32,
    },
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::SampleInlet { index } => write!(f, "sample inlet {index}"),
            Segment::BufferInlet { index } => write!(f, "buffer inlet {index}"),
            Segment::MixingChannel { junction } => {
                write!(f, "mixing channel after junction {junction}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LaminarVerdict {
    /// All segments laminar; `max_reynolds` is 0 with no open segment.
    Ok {
        max_reynolds: f64,
        location: Option<Segment>,
    },
    Violation {
        max_reynolds: f64,
        location: Segment,
    },
}

impl LaminarVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, LaminarVerdict::Ok { .. })
    }

    pub fn max_reynolds(&self) -> f64 {
        match self {
            LaminarVerdict::Ok { max_reynolds, .. }
            | LaminarVerdict::Violation { max_reynolds, .. } => *max_reynolds,
        }
    }
}

/// Junction order along the mixing channel: sample and buffer arms alternate,
/// the first pair forming the Y-junction.
pub fn junction_order(n: AccuracyLevel) -> Vec<Segment> {
    (0..n.get())
        .flat_map(|i| {
            [
                Segment::SampleInlet { index: i },
                Segment::BufferInlet { index: i },
            ]
        })
        .collect()
}

fn inlet_units(seg: Segment) -> u64 {
    match seg {
        Segment::SampleInlet { index } | Segment::BufferInlet { index } => 1 << index,
        Segment::MixingChannel { .. } => 0,
    }
}

fn is_open(seg: Segment, states: &InletStates) -> bool {
    match seg {
        Segment::SampleInlet { index } => states.sample_mix[index as usize].is_on(),
        Segment::BufferInlet { index } => states.buffer_mix[index as usize].is_on(),
        Segment::MixingChannel { .. } => false,
    }
}

fn check_width(states: &InletStates, spec: &ChannelSpec) -> Result<(), HydroError> {
    let n = spec.n.get();
    if states.sample_mix.len() != n as usize || states.buffer_mix.len() != n as usize {
        return Err(HydroError::MismatchedWidth {
            states: states.sample_mix.len().max(states.buffer_mix.len()),
            channel: n,
        });
    }
    Ok(())
}

/// Reynolds numbers of the given `(junction, inlet)` pairs; mixing-channel widths follow
/// the cumulative open width so the speed stays constant.
fn segment_reynolds(
    spec: &ChannelSpec,
    fluid: &FluidProps,
    open: impl Iterator<Item = (usize, Segment)>,
) -> Result<Vec<(Segment, f64)>, HydroError> {
    spec.validate()?;
    let mut out = Vec::new();
    let mut cumulative = 0u64;
    for (j, seg) in open {
        let units = inlet_units(seg);
        let width = spec.unit_width * units as f64;
        out.push((
            seg,
            reynolds(fluid, spec.injection_speed, spec.length_for(width))?,
        ));
        cumulative += units;
        let width = spec.unit_width * cumulative as f64;
        out.push((
            Segment::MixingChannel { junction: j as u32 },
            reynolds(fluid, spec.injection_speed, spec.length_for(width))?,
        ));
    }
    Ok(out)
}

fn verdict(values: Vec<(Segment, f64)>) -> LaminarVerdict {
    let worst = values.into_iter().max_by(|a, b| a.1.total_cmp(&b.1));
    match worst {
        None => LaminarVerdict::Ok {
            max_reynolds: 0.0,
            location: None,
        },
        Some((seg, r)) if r < LAMINAR_LIMIT => LaminarVerdict::Ok {
            max_reynolds: r,
            location: Some(seg),
        },
        Some((seg, r)) => LaminarVerdict::Violation {
            max_reynolds: r,
            location: seg,
        },
    }
}

/// Worst case over the whole network: every inlet open.
pub fn validate_laminar(
    spec: &ChannelSpec,
    fluid: &FluidProps,
) -> Result<LaminarVerdict, HydroError> {
    Ok(verdict(segment_reynolds(
        spec,
        fluid,
        junction_order(spec.n).into_iter().enumerate(),
    )?))
}

/// Only the inlets opened by `states`; with everything closed the verdict
/// is trivially laminar.
pub fn validate_laminar_for(
    states: &InletStates,
    spec: &ChannelSpec,
    fluid: &FluidProps,
) -> Result<LaminarVerdict, HydroError> {
    check_width(states, spec)?;
    let open = junction_order(spec.n)
        .into_iter()
        .enumerate()
        .filter(|(_, s)| is_open(*s, states));
    Ok(verdict(segment_reynolds(spec, fluid, open)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluxSegment {
    pub junction: Segment,
    /// Units entering at this junction (0 if the inlet is closed).
    pub inflow_units: u64,
    pub cumulative_units: u64,
    pub cumulative_sample_units: u64,
}

/// Cumulative flow along the mixing channel, one entry per junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxProfile {
    pub segments: Vec<FluxSegment>,
    /// m³/s carried by one unit.
    pub unit_flux: f64,
}

impl FluxProfile {
    pub fn final_units(&self) -> u64 {
        self.segments.last().map_or(0, |s| s.cumulative_units)
    }

    pub fn final_sample_units(&self) -> u64 {
        self.segments
            .last()
            .map_or(0, |s| s.cumulative_sample_units)
    }

    /// Concentration at the outlet, if any fluid flows.
    pub fn output_cf(&self) -> Option<Fraction> {
        let total = self.final_units();
        (total > 0).then(|| Fraction::from_u64(self.final_sample_units(), total))
    }

    pub fn is_monotone(&self) -> bool {
        self.segments
            .windows(2)
            .all(|w| w[0].cumulative_units <= w[1].cumulative_units)
    }

    /// Final flux in m³/s.
    pub fn final_flux(&self) -> f64 {
        self.final_units() as f64 * self.unit_flux
    }
}

pub fn flux_profile(states: &InletStates, spec: &ChannelSpec) -> Result<FluxProfile, HydroError> {
    check_width(states, spec)?;
    let mut total = 0;
    let mut sample = 0;
    let segments = junction_order(spec.n)
        .into_iter()
        .map(|seg| {
            let inflow = if is_open(seg, states) {
                inlet_units(seg)
            } else {
                0
            };
            total += inflow;
            if matches!(seg, Segment::SampleInlet { .. }) {
                sample += inflow;
            }
            FluxSegment {
                junction: seg,
                inflow_units: inflow,
                cumulative_units: total,
                cumulative_sample_units: sample,
            }
        })
        .collect();
    let profile = FluxProfile {
        segments,
        unit_flux: spec.unit_flux(),
    };
    debug_assert_eq!(
        profile.final_units(),
        decode(&states.sample_mix) + decode(&states.buffer_mix)
    );
    Ok(profile)
}
