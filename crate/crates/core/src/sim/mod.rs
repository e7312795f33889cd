//! Switched piecewise-linear simulation of one converter leg.
//!
//! Each step is backward Euler on the network valid for the gate pattern at
//! the end of the step. Clamp diodes are ideal switches with a forward drop
//! and resistance; their pattern is found by iteration inside each step.

mod step;
mod system;
mod trace;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

pub use step::{step, stored_energy, Simulator, StepResult};
pub use system::{assemble, ArmSystem, TopologyMatrices};
pub use trace::{CycleMean, EnergyTally, OutputCapture, SimTrace, TraceRow};

use crate::model::{ConfigError, ConverterConfig, ConverterState};
use crate::modulation::{Arm, CarrierSet, DelayModel, GateGenerator, ModulationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Modulation(#[from] ModulationError),
    #[error("state dimensions do not match the configuration")]
    StateShape,
    #[error("invalid displacement schedule: {0}")]
    Schedule(&'static str),
    #[error("invalid run plan: {0}")]
    Plan(&'static str),
    #[error("simulation diverged at t = {time} s")]
    Divergence {
        time: f64,
        /// Last state that was still finite.
        state: Box<ConverterState>,
    },
    #[error("clamp diode pattern unresolved after {iterations} iterations at t = {time} s")]
    UnresolvedDiodes {
        time: f64,
        iterations: usize,
        state: Box<ConverterState>,
    },
}

/// Piecewise-constant total displacement over time.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementSchedule {
    initial: f64,
    /// `(time, value)` pairs sorted by time.
    changes: Vec<(f64, f64)>,
}

impl DisplacementSchedule {
    pub fn constant(delta_a: f64) -> Self {
        Self {
            initial: delta_a,
            changes: Vec::new(),
        }
    }

    /// `initial` until `at`, then `value`.
    pub fn step(initial: f64, at: f64, value: f64) -> Self {
        Self {
            initial,
            changes: vec![(at, value)],
        }
    }

    pub fn from_changes(initial: f64, mut changes: Vec<(f64, f64)>) -> Result<Self, SimError> {
        changes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let s = Self { initial, changes };
        s.check()?;
        Ok(s)
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn changes(&self) -> &[(f64, f64)] {
        &self.changes
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.changes
            .iter()
            .take_while(|(at, _)| *at <= t)
            .last()
            .map_or(self.initial, |&(_, v)| v)
    }

    fn check(&self) -> Result<(), SimError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.initial) || self.changes.iter().any(|&(t, v)| !ok(v) || !(t >= 0.0)) {
            return Err(SimError::Schedule("values and times must be finite and >= 0"));
        }
        if self.changes.windows(2).any(|w| w[0].0 > w[1].0) {
            return Err(SimError::Schedule("change times must be sorted"));
        }
        Ok(())
    }
}

/// Everything about a run that is not part of the converter itself.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    pub duration: f64,
    pub schedule: DisplacementSchedule,
    pub delay: DelayModel,
    /// Record one row every this many steps.
    pub record_decimation: usize,
    pub record_clamp_currents: bool,
    /// Window `[start, end)` in which the output voltage is kept at full
    /// rate for spectral analysis.
    pub output_capture: Option<(f64, f64)>,
}

impl RunPlan {
    /// Duration, decimation and constant displacement from the configuration.
    pub fn from_config(cfg: &ConverterConfig) -> Self {
        Self {
            duration: cfg.numerics.duration,
            schedule: DisplacementSchedule::constant(cfg.total_displacement),
            delay: DelayModel::None,
            record_decimation: cfg.numerics.record_decimation,
            record_clamp_currents: false,
            output_capture: None,
        }
    }

    /// Keeps the output voltage of the last `cycles` fundamental cycles.
    pub fn capture_last_cycles(mut self, cfg: &ConverterConfig, cycles: f64) -> Self {
        let start = (self.duration - cycles / cfg.fundamental_freq).max(0.0);
        self.output_capture = Some((start, self.duration));
        self
    }
}

/// Runs `plan` on `cfg` from [`ConverterState::initial`].
pub fn simulate(cfg: &ConverterConfig, plan: &RunPlan) -> Result<SimTrace, SimError> {
    simulate_from(cfg, plan, ConverterState::initial(cfg))
}

/// Runs `plan` on `cfg` from an explicit initial state.
pub fn simulate_from(
    cfg: &ConverterConfig,
    plan: &RunPlan,
    initial: ConverterState,
) -> Result<SimTrace, SimError> {
    plan.schedule.check()?;
    if !(plan.duration.is_finite() && plan.duration > 0.0) {
        return Err(SimError::Plan("duration must be positive"));
    }
    if plan.record_decimation == 0 {
        return Err(SimError::Plan("record_decimation must be >= 1"));
    }
    let mut sim = Simulator::with_state(cfg, initial)?;
    let n = cfg.modules_per_arm;
    let dt = cfg.numerics.time_step;
    let carriers = |delta: f64| -> Result<(CarrierSet, CarrierSet), SimError> {
        Ok((
            CarrierSet::for_arm(Arm::Upper, n, delta, cfg.switching_freq)?,
            CarrierSet::for_arm(Arm::Lower, n, delta, cfg.switching_freq)?,
        ))
    };
    let mut delta = plan.schedule.value_at(sim.state().time);
    let (cu, cl) = carriers(delta)?;
    let mut gen = GateGenerator::new(cfg, &cu, &cl, plan.delay);
    let mut gu = vec![false; n];
    let mut gl = vec![false; n];
    let t0 = sim.state().time;
    gen.evaluate(t0, &mut gu, &mut gl);
    sim.set_gates(&gu, &gl);

    let mut trace = SimTrace::empty(
        n,
        plan.record_clamp_currents,
        dt,
        cfg.nominal_module_voltage(),
        cfg.fundamental_freq,
        sim.state().clone(),
    );
    trace.initial_stored = sim.stored_energy();
    let mut capture = plan.output_capture.map(|_| OutputCapture {
        t_start: f64::NAN,
        dt,
        samples: Vec::new(),
    });
    let capture_window = plan.output_capture;

    let period = 1.0 / cfg.fundamental_freq;
    let mut acc = CycleAccumulator::new(n, t0);
    let mut next_boundary = t0 + period;

    let total = (plan.duration / dt).round() as u64;
    for k in 1..=total {
        let t = t0 + k as f64 * dt;
        let d = plan.schedule.value_at(t);
        if d != delta {
            delta = d;
            let (cu, cl) = carriers(delta)?;
            gen.set_displacements(&cu, &cl);
        }
        gen.evaluate(t, &mut gu, &mut gl);
        let r = sim.step(&gu, &gl)?;
        sim.sync_time(t);
        trace.max_diode_iterations = trace.max_diode_iterations.max(r.diode_iterations);
        if r.substeps > 1 {
            trace.halved_steps += 1;
        }
        let st = sim.state();
        acc.add(st, dt);
        if t >= next_boundary - 0.5 * dt {
            trace
                .cycle_means
                .push(acc.finish(t, *sim.tally(), sim.stored_energy()));
            acc.reset(t);
            next_boundary += period;
        }
        if let (Some(cap), Some((start, end))) = (capture.as_mut(), capture_window) {
            if t >= start - 0.5 * dt && t < end - 0.5 * dt {
                if cap.samples.is_empty() {
                    cap.t_start = t;
                }
                cap.samples.push(sim.v_out());
            }
        }
        if k % plan.record_decimation as u64 == 0 {
            if violates_complementarity(st) {
                trace.complementarity_violations += 1;
            }
            trace.push_row(t, st, sim.v_out(), *sim.tally(), sim.stored_energy());
        }
    }
    trace.output_capture = capture;
    trace.steps = total;
    trace.final_state = sim.state().clone();
    trace.final_energy = *sim.tally();
    trace.final_stored = sim.stored_energy();
    Ok(trace)
}

fn violates_complementarity(st: &ConverterState) -> bool {
    st.upper
        .clamp_currents
        .iter()
        .chain(&st.lower.clamp_currents)
        .any(|&i| i < 0.0 || !i.is_finite())
}

/// Running sums over the current fundamental cycle.
struct CycleAccumulator {
    t_start: f64,
    time: f64,
    upper: Vec<f64>,
    lower: Vec<f64>,
    iu: f64,
    iu2: f64,
    il: f64,
    il2: f64,
    ic2: Vec<f64>,
}

impl CycleAccumulator {
    fn new(n: usize, t_start: f64) -> Self {
        Self {
            t_start,
            time: 0.0,
            upper: vec![0.0; n],
            lower: vec![0.0; n],
            iu: 0.0,
            iu2: 0.0,
            il: 0.0,
            il2: 0.0,
            ic2: vec![0.0; n],
        }
    }

    fn add(&mut self, st: &ConverterState, dt: f64) {
        self.time += dt;
        for (a, u) in self.upper.iter_mut().zip(&st.upper.cap_voltages) {
            *a += u * dt;
        }
        for (a, u) in self.lower.iter_mut().zip(&st.lower.cap_voltages) {
            *a += u * dt;
        }
        let (iu, il) = (st.arm_current_upper, st.arm_current_lower);
        self.iu += iu * dt;
        self.iu2 += iu * iu * dt;
        self.il += il * dt;
        self.il2 += il * il * dt;
        let arm = &st.upper;
        let n = self.ic2.len();
        for m in 0..n {
            let below = if m + 1 < n { arm.clamp_currents[m] } else { 0.0 };
            let ic = if arm.gate_series[m] {
                iu + below
            } else {
                below - if m > 0 { arm.clamp_currents[m - 1] } else { 0.0 }
            };
            self.ic2[m] += ic * ic * dt;
        }
    }

    fn finish(&self, t_end: f64, energy: EnergyTally, stored: f64) -> CycleMean {
        let s = 1.0 / self.time;
        CycleMean {
            t_start: self.t_start,
            t_end,
            upper: self.upper.iter().map(|v| v * s).collect(),
            lower: self.lower.iter().map(|v| v * s).collect(),
            arm_current_upper_mean: self.iu * s,
            arm_current_upper_sq_mean: self.iu2 * s,
            arm_current_lower_mean: self.il * s,
            arm_current_lower_sq_mean: self.il2 * s,
            cap_current_upper_sq_mean: self.ic2.iter().map(|v| v * s).collect(),
            energy,
            stored,
        }
    }

    fn reset(&mut self, t_start: f64) {
        self.t_start = t_start;
        self.time = 0.0;
        for v in self
            .upper
            .iter_mut()
            .chain(self.lower.iter_mut())
            .chain(self.ic2.iter_mut())
        {
            *v = 0.0;
        }
        self.iu = 0.0;
        self.iu2 = 0.0;
        self.il = 0.0;
        self.il2 = 0.0;
    }
}

#[cfg(test)]
mod tests;
