//! Dilution planning for free-flowing microfluidic diluters.
//!
//! A diluter with `n` sample and `n` buffer inlets of widths `1x, 2x, ...,
//! 2^{n-1}x` can dispense any ratio `a / (a + b)` with `a, b < 2^n`. This
//! crate builds the concentration lattices such a device supports, maps a
//! requested concentration factor onto the nearest lattice element exactly,
//! and turns the result into inlet port states, a split-free mix chain,
//! throughput variants, hydrodynamic checks and a network drawing.
//!
//! ```
//! use fsd_core::{approx, fsd, mixplan};
//!
//! let n = fsd::AccuracyLevel::new(6).unwrap();
//! let lattice = fsd::fsd_sequence(n);
//! let target = approx::parse_target("44.375/64").unwrap();
//! let hit = approx::find_closest_fast(&target, &lattice);
//! assert_eq!(hit.chosen.to_string(), "9/13");
//!
//! let plan = mixplan::make_plan_in(&hit.chosen, &lattice).unwrap();
//! assert_eq!((plan.sample_units, plan.buffer_units), (9, 4));
//! ```

pub mod approx;
pub mod fsd;
pub mod hydro;
pub mod interchange;
pub mod layout;
pub mod mixplan;
pub mod rational;
pub mod report;

pub use approx::{Approximation, TargetCf};
pub use fsd::{AccuracyLevel, FsdSequence, SequenceKind};
pub use mixplan::{DilutionPlan, InletStates};
pub use rational::Fraction;
