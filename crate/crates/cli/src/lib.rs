//! Scenario files, trace and report output, and the `lapsc` command line
//! for the [`lapsc_core`] simulator.
//!
//! * [`scenario`]: TOML scenario schema, shipped presets, resolution into
//!   core inputs.
//! * [`run`]: simulate, loss and sweep pipelines.
//! * [`trace`]: CSV traces.
//! * [`report`]: TOML report trees.

pub use lapsc_core as core;

pub mod report;
pub mod run;
pub mod scenario;
pub mod trace;
