//! Structural model of the `2n`-inlet serpentine diluter and its emitters.
//!
//! The schematic is stylized: fixed segment lengths, inlet arms meeting the
//! mixing channel at 60° to its axis (120° between a sample/buffer pair),
//! stroke widths proportional to `2^i`, and the fin zones A–F drawn as
//! labelled boxes. It is a legible drawing, not a mask.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsd::AccuracyLevel;
use crate::interchange::{self, InterchangeError};
use crate::mixplan::{inlet_states, DilutionPlan, Fluid, InletStates, PortState};
use crate::rational::Fraction;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("inlet states carry {got} inlets per fluid, network needs {expected}")]
    WidthMismatch { got: usize, expected: u32 },
    #[error("invalid network model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Interchange(#[from] InterchangeError),
}

/// Where inlet arms join the mixing channel after the initial Y-junction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmOrder {
    /// S0+B0 (Y-junction), S1, B1, S2, B2, ...
    #[default]
    Alternating,
    /// S0+B0 (Y-junction), S1, ..., S(n-1), B1, ..., B(n-1)
    SampleFirst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inlet {
    pub fluid: Fluid,
    pub index: u32,
    /// Width in units of the narrowest inlet, `2^index`.
    pub width_multiplier: u64,
    pub mix_port: PortState,
    pub reuse_port: PortState,
}

/// An arm joining the mixing channel at `station` (0 is the Y-junction).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junction {
    pub station: u32,
    pub fluid: Fluid,
    pub inlet: u32,
}

/// Return path carrying unused fluid back to its reservoir.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReuseChannel {
    pub fluid: Fluid,
    /// Inlets whose re-use port is open.
    pub open_inlets: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub n: AccuracyLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cf: Option<Fraction>,
    pub arm_order: ArmOrder,
    pub sample_inlets: Vec<Inlet>,
    pub buffer_inlets: Vec<Inlet>,
    pub junctions: Vec<Junction>,
    pub reuse_channels: Vec<ReuseChannel>,
    pub outlet: String,
}

fn inlets(fluid: Fluid, mix: &[PortState]) -> Vec<Inlet> {
    mix.iter()
        .enumerate()
        .map(|(i, &state)| Inlet {
            fluid,
            index: i as u32,
            width_multiplier: 1 << i,
            mix_port: state,
            reuse_port: state.complement(),
        })
        .collect()
}

fn junctions(n: u32, order: ArmOrder) -> Vec<Junction> {
    let j = |station, fluid, inlet| Junction {
        station,
        fluid,
        inlet,
    };
    let mut out = vec![j(0, Fluid::Sample, 0), j(0, Fluid::Buffer, 0)];
    match order {
        ArmOrder::Alternating => {
            for i in 1..n {
                out.push(j(2 * i - 1, Fluid::Sample, i));
                out.push(j(2 * i, Fluid::Buffer, i));
            }
        }
        ArmOrder::SampleFirst => {
            for i in 1..n {
                out.push(j(i, Fluid::Sample, i));
            }
            for i in 1..n {
                out.push(j(n - 1 + i, Fluid::Buffer, i));
            }
        }
    }
    out
}

impl NetworkModel {
    /// Network whose mixing ports follow `states`.
    pub fn from_states(
        n: AccuracyLevel,
        states: &InletStates,
        arm_order: ArmOrder,
    ) -> Result<Self, LayoutError> {
        for got in [states.sample_mix.len(), states.buffer_mix.len()] {
            if got != n.get() as usize {
                return Err(LayoutError::WidthMismatch {
                    got,
                    expected: n.get(),
                });
            }
        }
        let sample_inlets = inlets(Fluid::Sample, &states.sample_mix);
        let buffer_inlets = inlets(Fluid::Buffer, &states.buffer_mix);
        let reuse = |fluid, inlets: &[Inlet]| ReuseChannel {
            fluid,
            open_inlets: inlets
                .iter()
                .filter(|i| i.reuse_port.is_on())
                .map(|i| i.index)
                .collect(),
        };
        Ok(NetworkModel {
            n,
            cf: None,
            arm_order,
            reuse_channels: vec![
                reuse(Fluid::Sample, &sample_inlets),
                reuse(Fluid::Buffer, &buffer_inlets),
            ],
            sample_inlets,
            buffer_inlets,
            junctions: junctions(n.get(), arm_order),
            outlet: "outlet".to_string(),
        })
    }

    pub fn inlets(&self) -> impl Iterator<Item = &Inlet> {
        self.sample_inlets.iter().chain(&self.buffer_inlets)
    }

    pub fn open_mix_ports(&self) -> usize {
        self.inlets().filter(|i| i.mix_port.is_on()).count()
    }

    pub fn states(&self) -> InletStates {
        let bits = |v: &[Inlet]| v.iter().map(|i| i.mix_port.is_on()).collect::<Vec<_>>();
        InletStates::from_mix_bits(&bits(&self.sample_inlets), &bits(&self.buffer_inlets))
    }

    /// Checks the structural invariants a parsed model must satisfy.
    pub fn validate(&self) -> Result<(), LayoutError> {
        let n = self.n.get();
        let bad = |msg: String| Err(LayoutError::Invalid(msg));
        if self.sample_inlets.len() != n as usize || self.buffer_inlets.len() != n as usize {
            return bad(format!("expected {n} sample and {n} buffer inlets"));
        }
        for (fluid, list) in [
            (Fluid::Sample, &self.sample_inlets),
            (Fluid::Buffer, &self.buffer_inlets),
        ] {
            for (i, inlet) in list.iter().enumerate() {
                if inlet.fluid != fluid
                    || inlet.index != i as u32
                    || inlet.width_multiplier != 1 << i
                {
                    return bad(format!("{fluid} inlet {i} is mislabelled"));
                }
                if inlet.mix_port != inlet.reuse_port.complement() {
                    return bad(format!("{fluid} inlet {i} ports are not complementary"));
                }
            }
        }
        if self.junctions != junctions(n, self.arm_order) {
            return bad("junction order does not match arm order".to_string());
        }
        let expected = NetworkModel::from_states(self.n, &self.states(), self.arm_order)?;
        if self.reuse_channels != expected.reuse_channels {
            return bad("re-use channels disagree with port states".to_string());
        }
        if self.outlet.is_empty() {
            return bad("missing outlet".to_string());
        }
        Ok(())
    }
}

pub fn build_network(plan: &DilutionPlan) -> NetworkModel {
    build_network_with(plan, ArmOrder::default())
}

pub fn build_network_with(plan: &DilutionPlan, arm_order: ArmOrder) -> NetworkModel {
    let mut model = NetworkModel::from_states(plan.n, &inlet_states(plan), arm_order)
        .expect("plan bit vectors have n entries");
    model.cf = Some(plan.cf.clone());
    model
}

/// JSON description in the interchange envelope.
pub fn emit_description(model: &NetworkModel) -> String {
    interchange::to_json(interchange::KIND_NETWORK, model)
}

pub fn parse_description(text: &str) -> Result<NetworkModel, LayoutError> {
    let model: NetworkModel = interchange::from_json(interchange::KIND_NETWORK, text)?;
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchematicConfig {
    /// Horizontal distance between junction stations (px).
    pub station_spacing: f64,
    pub arm_length: f64,
    /// Stroke width of the widest inlet; narrower ones scale by `2^-k`.
    pub max_stroke: f64,
    pub open_color: String,
    pub closed_color: String,
}

impl Default for SchematicConfig {
    fn default() -> Self {
        SchematicConfig {
            station_spacing: 70.0,
            arm_length: 110.0,
            max_stroke: 16.0,
            open_color: "green".to_string(),
            closed_color: "red".to_string(),
        }
    }
}

pub fn emit_schematic(model: &NetworkModel) -> String {
    emit_schematic_with(model, &SchematicConfig::default())
}

/// SVG 1.1 drawing of the network; byte-identical for identical inputs.
pub fn emit_schematic_with(model: &NetworkModel, cfg: &SchematicConfig) -> String {
    let n = model.n.get();
    let stations = model.junctions.iter().map(|j| j.station).max().unwrap_or(0) + 1;
    let (sin60, cos60) = (3f64.sqrt() / 2.0, 0.5);

    let margin = 40.0;
    let x0 = margin + cfg.arm_length * cos60 + 20.0;
    let axis_y = 60.0 + cfg.arm_length * sin60 + 30.0;
    let channel_end = x0 + cfg.station_spacing * (stations as f64 - 1.0) + 40.0;
    let zone_w = 60.0;
    let serp_end = channel_end + zone_w * 6.0;
    let width = serp_end + 90.0;
    let height = 2.0 * axis_y;
    let top_return = 30.0;
    let bottom_return = height - 30.0;

    let stroke = |mult: u64| cfg.max_stroke * mult as f64 / (1u64 << (n - 1)) as f64;
    let color = |s: PortState| {
        if s.is_on() {
            &cfg.open_color
        } else {
            &cfg.closed_color
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let title = match &model.cf {
        Some(cf) => format!("Serpentine diluter, n = {n}, CF = {cf}"),
        None => format!("Serpentine diluter, n = {n}"),
    };
    let _ = writeln!(svg, "  <title>{title}</title>");
    let _ = writeln!(
        svg,
        r#"  <text x="{margin:.1}" y="18.0" font-family="sans-serif" font-size="13">{title}</text>"#
    );

    // re-use channels
    for (fluid, y) in [(Fluid::Sample, top_return), (Fluid::Buffer, bottom_return)] {
        let _ = writeln!(
            svg,
            r#"  <line class="reuse-channel {fluid}" x1="{margin:.1}" y1="{y:.1}" x2="{channel_end:.1}" y2="{y:.1}" stroke="gray" stroke-width="2.0" stroke-dasharray="6 3"/>"#
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10">{fluid} re-use</text>"#,
            channel_end + 6.0,
            y + 3.0
        );
    }

    // mixing channel up to the last junction
    let _ = writeln!(
        svg,
        r#"  <line class="mixing-channel" x1="{x0:.1}" y1="{axis_y:.1}" x2="{channel_end:.1}" y2="{axis_y:.1}" stroke="black" stroke-width="{:.2}"/>"#,
        cfg.max_stroke
    );

    for junction in &model.junctions {
        let inlet = match junction.fluid {
            Fluid::Sample => &model.sample_inlets[junction.inlet as usize],
            Fluid::Buffer => &model.buffer_inlets[junction.inlet as usize],
        };
        let jx = x0 + cfg.station_spacing * junction.station as f64;
        let dir = if junction.fluid == Fluid::Sample {
            -1.0
        } else {
            1.0
        };
        let ex = jx - cfg.arm_length * cos60;
        let ey = axis_y + dir * cfg.arm_length * sin60;
        let fluid = junction.fluid;
        let i = inlet.index;
        let _ = writeln!(
            svg,
            r#"  <line class="arm {fluid}" data-inlet="{i}" x1="{ex:.1}" y1="{ey:.1}" x2="{jx:.1}" y2="{axis_y:.1}" stroke="{}" stroke-width="{:.3}"/>"#,
            if fluid == Fluid::Sample {
                "#1f4e9c"
            } else {
                "#6b8e23"
            },
            stroke(inlet.width_multiplier)
        );
        let _ = writeln!(
            svg,
            r#"  <circle class="port mix {fluid}" data-inlet="{i}" data-state="{}" cx="{ex:.1}" cy="{ey:.1}" r="7.0" fill="{}" stroke="black"/>"#,
            inlet.mix_port,
            color(inlet.mix_port)
        );
        let return_y = if fluid == Fluid::Sample {
            top_return
        } else {
            bottom_return
        };
        let _ = writeln!(
            svg,
            r#"  <line class="reuse-branch {fluid}" data-inlet="{i}" x1="{ex:.1}" y1="{ey:.1}" x2="{ex:.1}" y2="{return_y:.1}" stroke="gray" stroke-width="1.0"/>"#
        );
        let ry = (ey + return_y) / 2.0;
        let _ = writeln!(
            svg,
            r#"  <rect class="port reuse {fluid}" data-inlet="{i}" data-state="{}" x="{:.1}" y="{:.1}" width="10.0" height="10.0" fill="{}" stroke="black"/>"#,
            inlet.reuse_port,
            ex - 5.0,
            ry - 5.0,
            color(inlet.reuse_port)
        );
        let label_y = ey + dir * 16.0;
        let _ = writeln!(
            svg,
            r#"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="9">{}{i} ({}x)</text>"#,
            ex - 14.0,
            label_y + 3.0,
            if fluid == Fluid::Sample { "S" } else { "B" },
            inlet.width_multiplier
        );
    }

    // serpentine mixer with fin zones
    let amp = 40.0;
    let mut points = vec![format!("{channel_end:.1},{axis_y:.1}")];
    for z in 0..6 {
        let zx = channel_end + zone_w * z as f64;
        let top = axis_y - amp;
        let bottom = axis_y + amp;
        points.push(format!("{:.1},{top:.1}", zx + zone_w * 0.25));
        points.push(format!("{:.1},{bottom:.1}", zx + zone_w * 0.75));
    }
    points.push(format!("{serp_end:.1},{axis_y:.1}"));
    let _ = writeln!(
        svg,
        r#"  <polyline class="serpentine" points="{}" fill="none" stroke="black" stroke-width="{:.2}"/>"#,
        points.join(" "),
        cfg.max_stroke / 2.0
    );
    for (z, label) in ["A", "B", "C", "D", "E", "F"].iter().enumerate() {
        let zx = channel_end + zone_w * z as f64;
        let _ = writeln!(
            svg,
            r#"  <rect class="fin-zone" x="{zx:.1}" y="{:.1}" width="{zone_w:.1}" height="{:.1}" fill="none" stroke="darkgray" stroke-dasharray="3 3"/>"#,
            axis_y - amp - 10.0,
            2.0 * amp + 20.0
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10">{label}</text>"#,
            zx + zone_w / 2.0 - 3.0,
            axis_y - amp - 14.0
        );
    }

    let _ = writeln!(
        svg,
        r#"  <circle class="outlet" cx="{:.1}" cy="{axis_y:.1}" r="9.0" fill="white" stroke="black" stroke-width="2.0"/>"#,
        serp_end + 10.0
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{}</text>"#,
        serp_end + 24.0,
        axis_y + 4.0,
        model.outlet
    );
    svg.push_str("</svg>\n");
    svg
}
