//! Report trees written as TOML.
//!
//! Optional figures that could not be computed are left out of the tree;
//! `converged` and `thd_available` make the absence explicit.

use lapsc_core::design::DesignReport;
use lapsc_core::loss::LossReport;
use lapsc_core::metrics::MetricsReport;
use lapsc_core::model::{ConverterConfig, LoadSpec};
use lapsc_core::sim::EnergyTally;
use lapsc_core::{DelayModel, SimTrace};
use serde::Serialize;

use crate::scenario::{Resolved, Scenario};

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioEcho {
    pub name: String,
    pub preset: String,
    pub delay_model: String,
    pub duration: f64,
    pub time_step: f64,
    pub record_decimation: usize,
    pub displacement_initial: f64,
    /// `[time, value]` pairs.
    pub displacement_steps: Vec<[f64; 2]>,
}

impl ScenarioEcho {
    pub fn new(s: &Scenario, r: &Resolved) -> Self {
        let preset = toml::Value::try_from(s.preset)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        Self {
            name: s.name.clone(),
            preset,
            delay_model: match r.plan.delay {
                DelayModel::None => "none",
                DelayModel::ZeroOrderHold => "zero_order_hold",
            }
            .into(),
            duration: r.plan.duration,
            time_step: r.config.numerics.time_step,
            record_decimation: r.plan.record_decimation,
            displacement_initial: r.plan.schedule.initial(),
            displacement_steps: r.plan.schedule.changes().iter().map(|&(t, v)| [t, v]).collect(),
        }
    }
}

/// Every assumed value the results depend on.
#[derive(Clone, Debug, Serialize)]
pub struct Defaults {
    pub thd_bandwidth: f64,
    pub thd_cycles: usize,
    pub band: f64,
    pub consecutive: usize,
    pub convergence_after: f64,
    pub steady_cycles: usize,
    pub switch_on_drop: f64,
    pub switch_on_resistance: f64,
    pub turn_on_time: f64,
    pub turn_off_time: f64,
    pub diode_drop: f64,
    pub diode_resistance: f64,
    pub clamp_inductor_resistance: f64,
    pub capacitor_esr: f64,
    pub arm_resistance: f64,
    pub load: String,
    pub load_amplitude_or_resistance: f64,
    pub load_angle_or_inductance: f64,
}

impl Defaults {
    pub fn new(cfg: &ConverterConfig, thd_bandwidth: f64, r: &Resolved, steady_cycles: usize) -> Self {
        let o = &r.outputs;
        let cp = cfg.clamp_params(0);
        let (load, a, b) = match cfg.load {
            LoadSpec::CurrentSource { amplitude, load_angle } => ("current_source", amplitude, load_angle),
            LoadSpec::SeriesRl { resistance, inductance } => ("series_rl", resistance, inductance),
        };
        Self {
            thd_bandwidth,
            thd_cycles: o.thd_cycles.unwrap_or(lapsc_core::metrics::MIN_THD_CYCLES),
            band: o.band.unwrap_or(lapsc_core::metrics::DEFAULT_BAND),
            consecutive: o.consecutive.unwrap_or(lapsc_core::metrics::DEFAULT_CONSECUTIVE),
            convergence_after: o.convergence_after.unwrap_or(0.0),
            steady_cycles,
            switch_on_drop: cfg.switch.on_drop,
            switch_on_resistance: cfg.switch.on_resistance,
            turn_on_time: cfg.switch.turn_on_time,
            turn_off_time: cfg.switch.turn_off_time,
            diode_drop: cp.diode_drop,
            diode_resistance: cp.diode_resistance,
            clamp_inductor_resistance: cp.inductor_resistance,
            capacitor_esr: cfg.upper_arm_modules[0].esr,
            arm_resistance: cfg.arm_resistance,
            load: load.into(),
            load_amplitude_or_resistance: a,
            load_angle_or_inductance: b,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverStats {
    pub steps: u64,
    pub recorded_rows: usize,
    pub cycles: usize,
    pub max_diode_iterations: usize,
    pub halved_steps: u64,
    pub complementarity_violations: u64,
}

impl SolverStats {
    pub fn new(t: &SimTrace) -> Self {
        Self {
            steps: t.steps,
            recorded_rows: t.len(),
            cycles: t.cycle_means.len(),
            max_diode_iterations: t.max_diode_iterations,
            halved_steps: t.halved_steps,
            complementarity_violations: t.complementarity_violations,
        }
    }
}

/// Cumulative energies in joules over the whole run.
#[derive(Clone, Debug, Serialize)]
pub struct EnergySection {
    pub source: f64,
    pub load: f64,
    pub switch_conduction: f64,
    pub diode: f64,
    pub capacitor_esr: f64,
    pub leak: f64,
    pub clamp_inductor: f64,
    pub arm_resistance: f64,
    pub switching: f64,
    pub stored_change: f64,
    /// `source - load - dissipated - stored_change`.
    pub residual: f64,
    pub residual_relative: f64,
}

impl EnergySection {
    pub fn new(t: &SimTrace) -> Self {
        let e: EnergyTally = t.final_energy;
        let stored_change = t.final_stored - t.initial_stored;
        let residual = energy_residual(t);
        Self {
            source: e.source,
            load: e.load,
            switch_conduction: e.switch_conduction,
            diode: e.diode,
            capacitor_esr: e.capacitor_esr,
            leak: e.leak,
            clamp_inductor: e.clamp_inductor,
            arm_resistance: e.arm_resistance,
            switching: e.switching,
            stored_change,
            residual,
            residual_relative: residual / e.source.abs().max(f64::MIN_POSITIVE),
        }
    }
}

pub fn energy_residual(t: &SimTrace) -> f64 {
    let e = t.final_energy;
    e.source - e.load - e.dissipated() - (t.final_stored - t.initial_stored)
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsSection {
    pub thd_available: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thd: Option<f64>,
    pub thd_bandwidth: f64,
    pub band: f64,
    pub spread_final: f64,
    pub max_deviation_final: f64,
    pub max_deviation_peak: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_rate: Option<f64>,
    pub final_upper: Vec<f64>,
    pub final_lower: Vec<f64>,
}

impl From<&MetricsReport> for MetricsSection {
    fn from(m: &MetricsReport) -> Self {
        Self {
            thd_available: m.thd.is_some(),
            thd: m.thd,
            thd_bandwidth: m.thd_bandwidth,
            band: m.band,
            spread_final: m.spread_final,
            max_deviation_final: m.max_deviation_final,
            max_deviation_peak: m.max_deviation_peak,
            converged: m.convergence_time.is_some(),
            convergence_time: m.convergence_time,
            drift_rate: m.drift_rate,
            final_upper: m.final_upper.clone(),
            final_lower: m.final_lower.clone(),
        }
    }
}

/// Per-arm powers in watts; `throughput` is for the whole leg.
#[derive(Clone, Debug, Serialize)]
pub struct LossSection {
    pub rms_cap_current: f64,
    pub rms_arm_current: f64,
    pub avg_arm_current: f64,
    pub conduction_loss: f64,
    pub switching_loss: f64,
    pub total_arm_loss: f64,
    pub balancing_loss: f64,
    pub clamp_and_arm_loss: f64,
    pub leak_loss: f64,
    pub throughput: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_module_balancing: Vec<f64>,
    pub notes: Vec<String>,
}

impl From<&LossReport> for LossSection {
    fn from(l: &LossReport) -> Self {
        Self {
            rms_cap_current: l.rms_cap_current,
            rms_arm_current: l.rms_arm_current,
            avg_arm_current: l.avg_arm_current,
            conduction_loss: l.conduction_loss,
            switching_loss: l.switching_loss,
            total_arm_loss: l.total_arm_loss,
            balancing_loss: l.balancing_loss,
            clamp_and_arm_loss: l.clamp_and_arm_loss,
            leak_loss: l.leak_loss,
            throughput: l.throughput,
            per_module_balancing: l.per_pair_balancing.clone(),
            notes: l.notes.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LossPair {
    pub analytic: LossSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated: Option<LossSection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: ScenarioEcho,
    pub defaults: Defaults,
    pub solver: SolverStats,
    pub energy: EnergySection,
    pub metrics: MetricsSection,
    pub loss: LossPair,
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignSection {
    pub epsilon: f64,
    pub k_factor: f64,
    pub dc_arm_current: f64,
    pub imbalance_current: f64,
    pub drift_per_cycle: f64,
    pub compensation_per_cycle: f64,
    pub min_displacement: f64,
    pub inductor_lower: f64,
    /// Absent when the displacement is zero (no upper limit).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inductor_upper: Option<f64>,
    pub inductor_feasible: bool,
    pub avg_on_time: f64,
    pub avg_balancing_current: f64,
    pub peak_diode_current: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignEcho {
    pub tolerance: f64,
    pub u_diff_max: f64,
    pub i_d_max: f64,
    pub i_p: f64,
    pub phi: f64,
    pub delta_a: f64,
    pub modules_per_arm: usize,
    pub capacitance: f64,
    pub clamp_inductance: f64,
    pub switching_freq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignDocument {
    pub scenario: String,
    pub inputs: DesignEcho,
    pub design: DesignSection,
}

impl DesignDocument {
    pub fn new(name: &str, cfg: &ConverterConfig, d: &DesignReport) -> Self {
        Self {
            scenario: name.into(),
            inputs: DesignEcho {
                tolerance: d.tolerance,
                u_diff_max: d.u_diff_max,
                i_d_max: d.i_d_max,
                i_p: d.i_p,
                phi: d.phi,
                delta_a: d.delta_a,
                modules_per_arm: cfg.modules_per_arm,
                capacitance: lapsc_core::design::rated_capacitance(cfg),
                clamp_inductance: cfg.clamp_params(0).inductance,
                switching_freq: cfg.switching_freq,
            },
            design: DesignSection {
                epsilon: d.epsilon,
                k_factor: d.k_factor,
                dc_arm_current: d.dc_arm_current,
                imbalance_current: d.imbalance_current,
                drift_per_cycle: d.drift_per_cycle,
                compensation_per_cycle: d.compensation_per_cycle,
                min_displacement: d.min_displacement,
                inductor_lower: d.inductor_lower,
                inductor_upper: d.inductor_upper.is_finite().then_some(d.inductor_upper),
                inductor_feasible: d.inductor_feasible,
                avg_on_time: d.avg_on_time,
                avg_balancing_current: d.avg_balancing_current,
                peak_diode_current: d.peak_diode_current,
                notes: d.notes.iter().map(|s| s.to_string()).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LossDocument {
    pub scenario: String,
    pub delta_a: f64,
    pub defaults: LossDefaults,
    pub analytic: LossSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated: Option<LossSection>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LossDefaults {
    pub v0: f64,
    pub r: f64,
    pub clamp_inductor_resistance: f64,
    pub steady_cycles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation_final: Option<f64>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_time: Option<f64>,
    /// Per arm: switch, capacitor and switching losses plus clamp and arm
    /// resistance losses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_loss: Option<f64>,
    /// Per arm, against the same scenario without displacement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balancing_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thd: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepDocument {
    pub scenario: String,
    pub axis: String,
    pub band: f64,
    pub rows: Vec<SweepRow>,
}

pub fn to_toml<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("report serializes")
}
