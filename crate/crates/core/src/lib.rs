//! Diode-clamped modular multilevel converter (MMC) with level-adjusted
//! phase-shifted carrier (LAPSC) modulation.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`model`]: converter, module, clamp and load parameters plus validation.
//! * [`modulation`]: carrier sets, per-module references and gate signals.
//! * [`clamp`]: closed-form analysis of a single clamp path.
//! * [`design`]: analytic sizing rules (displacement floor, inductor window).
//! * [`sim`]: fixed-step switched piecewise-linear simulator of one leg.
//! * [`loss`]: analytic and simulated loss figures.
//! * [`metrics`]: THD, module voltage spread and convergence detection.
//!
//! File formats, scenario files and the command line live in the `lapsc`
//! companion crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod clamp;
pub mod design;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod modulation;
pub mod sim;

pub use model::{
    ArmState, ClampParams, ClampSpec, ConverterConfig, ConverterState, LoadSpec, ModuleParams,
    NumericsSpec, SwitchParams,
};
pub use modulation::{Arm, CarrierSet, DelayModel, GateFrame};
pub use sim::{DisplacementSchedule, RunPlan, SimTrace};
