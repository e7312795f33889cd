use alloc::vec::Vec;

use crate::model::ConverterState;

/// Cumulative energies in joules. Every dissipation class is non-negative
/// apart from rounding; `source` is what the dc link delivered and `load`
/// what the ac terminal absorbed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTally {
    pub source: f64,
    pub load: f64,
    /// Main switches: `V_sw |i| + r_sw i^2`.
    pub switch_conduction: f64,
    /// Clamp diodes, including magnetic energy dropped when a clamp current
    /// is clamped at zero.
    pub diode: f64,
    pub capacitor_esr: f64,
    pub leak: f64,
    pub clamp_inductor: f64,
    pub arm_resistance: f64,
    /// Commutation losses drawn from the module capacitors.
    pub switching: f64,
}

impl EnergyTally {
    pub fn dissipated(&self) -> f64 {
        self.switch_conduction
            + self.diode
            + self.capacitor_esr
            + self.leak
            + self.clamp_inductor
            + self.arm_resistance
            + self.switching
    }

    /// Componentwise `self - earlier`.
    pub fn since(&self, earlier: &EnergyTally) -> EnergyTally {
        EnergyTally {
            source: self.source - earlier.source,
            load: self.load - earlier.load,
            switch_conduction: self.switch_conduction - earlier.switch_conduction,
            diode: self.diode - earlier.diode,
            capacitor_esr: self.capacitor_esr - earlier.capacitor_esr,
            leak: self.leak - earlier.leak,
            clamp_inductor: self.clamp_inductor - earlier.clamp_inductor,
            arm_resistance: self.arm_resistance - earlier.arm_resistance,
            switching: self.switching - earlier.switching,
        }
    }
}

/// Full-rate averages over one fundamental cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleMean {
    pub t_start: f64,
    pub t_end: f64,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub arm_current_upper_mean: f64,
    pub arm_current_upper_sq_mean: f64,
    pub arm_current_lower_mean: f64,
    pub arm_current_lower_sq_mean: f64,
    /// Mean square of each upper-arm capacitor branch current.
    pub cap_current_upper_sq_mean: Vec<f64>,
    /// Energy tally and stored energy at the end of the cycle.
    pub energy: EnergyTally,
    pub stored: f64,
}

/// Output voltage sampled at every step inside a capture window.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputCapture {
    pub t_start: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

/// Decimated time series of one run plus full-rate summaries.
///
/// Each row holds, in order: upper capacitor voltages (N), lower capacitor
/// voltages (N), upper and lower arm currents, output voltage, output
/// current, and optionally the clamp currents of both arms (2(N-1)).
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub modules_per_arm: usize,
    pub has_clamp_currents: bool,
    pub dt: f64,
    pub nominal_module_voltage: f64,
    pub fundamental_freq: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Cumulative tally at each recorded row.
    pub energy: Vec<EnergyTally>,
    /// Stored energy at each recorded row.
    pub stored: Vec<f64>,
    pub cycle_means: Vec<CycleMean>,
    pub output_capture: Option<OutputCapture>,
    pub initial_stored: f64,
    pub final_state: ConverterState,
    pub final_energy: EnergyTally,
    pub final_stored: f64,
    pub steps: u64,
    pub max_diode_iterations: usize,
    pub halved_steps: u64,
    /// Recorded rows where a clamp current was negative or a blocked clamp
    /// carried current. Always zero for a healthy run.
    pub complementarity_violations: u64,
}

impl SimTrace {
    pub fn empty(n: usize, has_clamp_currents: bool, dt: f64, v_m: f64, f1: f64, state: ConverterState) -> Self {
        Self {
            modules_per_arm: n,
            has_clamp_currents,
            dt,
            nominal_module_voltage: v_m,
            fundamental_freq: f1,
            times: Vec::new(),
            values: Vec::new(),
            energy: Vec::new(),
            stored: Vec::new(),
            cycle_means: Vec::new(),
            output_capture: None,
            initial_stored: 0.0,
            final_state: state,
            final_energy: EnergyTally::default(),
            final_stored: 0.0,
            steps: 0,
            max_diode_iterations: 0,
            halved_steps: 0,
            complementarity_violations: 0,
        }
    }

    /// Number of values per row (time excluded).
    pub fn width(&self) -> usize {
        let n = self.modules_per_arm;
        2 * n + 4 + if self.has_clamp_currents { 2 * (n - 1) } else { 0 }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn row(&self, i: usize) -> TraceRow<'_> {
        let w = self.width();
        TraceRow {
            n: self.modules_per_arm,
            time: self.times[i],
            values: &self.values[i * w..(i + 1) * w],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = TraceRow<'_>> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub(crate) fn push_row(&mut self, time: f64, state: &ConverterState, v_out: f64, tally: EnergyTally, stored: f64) {
        self.times.push(time);
        self.values.extend_from_slice(&state.upper.cap_voltages);
        self.values.extend_from_slice(&state.lower.cap_voltages);
        self.values.extend_from_slice(&[
            state.arm_current_upper,
            state.arm_current_lower,
            v_out,
            state.output_current,
        ]);
        if self.has_clamp_currents {
            self.values.extend_from_slice(&state.upper.clamp_currents);
            self.values.extend_from_slice(&state.lower.clamp_currents);
        }
        self.energy.push(tally);
        self.stored.push(stored);
    }

    /// Appends a row of raw values; used for synthetic traces.
    pub fn push_raw(&mut self, time: f64, values: &[f64]) {
        assert_eq!(values.len(), self.width(), "row width mismatch");
        self.times.push(time);
        self.values.extend_from_slice(values);
        self.energy.push(EnergyTally::default());
        self.stored.push(0.0);
    }
}

/// Borrowed view of one trace row.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow<'a> {
    n: usize,
    pub time: f64,
    pub values: &'a [f64],
}

impl<'a> TraceRow<'a> {
    pub fn upper_caps(&self) -> &'a [f64] {
        &self.values[..self.n]
    }
    pub fn lower_caps(&self) -> &'a [f64] {
        &self.values[self.n..2 * self.n]
    }
    pub fn arm_current_upper(&self) -> f64 {
        self.values[2 * self.n]
    }
    pub fn arm_current_lower(&self) -> f64 {
        self.values[2 * self.n + 1]
    }
    pub fn v_out(&self) -> f64 {
        self.values[2 * self.n + 2]
    }
    pub fn i_out(&self) -> f64 {
        self.values[2 * self.n + 3]
    }
    /// Upper then lower clamp currents, empty when not recorded.
    pub fn clamp_currents(&self) -> &'a [f64] {
        &self.values[(2 * self.n + 4).min(self.values.len())..]
    }
}
