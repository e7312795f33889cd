//! Physical description of one single-phase diode-clamped MMC leg.
//!
//! All quantities are SI (volts, amperes, ohms, farads, henries, seconds).
//! Modules are indexed from the dc rail towards the ac terminal; index 0 is
//! the first module of an arm. Clamp `k` links module `k + 1` (anode side)
//! to module `k`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;

/// One half-bridge submodule capacitor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleParams {
    pub capacitance: f64,
    /// Equivalent series resistance of the capacitor.
    pub esr: f64,
    /// Optional parallel self-discharge resistor.
    pub leak_resistance: Option<f64>,
    pub initial_voltage: f64,
}

impl ModuleParams {
    pub fn new(capacitance: f64, esr: f64, initial_voltage: f64) -> Self {
        Self {
            capacitance,
            esr,
            leak_resistance: None,
            initial_voltage,
        }
    }
}

/// Piecewise-linear switch model shared by every main switch.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchParams {
    /// Constant conduction drop; equal to the diode drop under the
    /// equal-drop assumption of the loss model.
    pub on_drop: f64,
    pub on_resistance: f64,
    pub turn_on_time: f64,
    pub turn_off_time: f64,
}

/// Clamp branch: diode in series with the clamp inductor.
#[derive(Clone, Debug, PartialEq)]
pub struct ClampParams {
    pub inductance: f64,
    pub inductor_resistance: f64,
    pub diode_drop: f64,
    pub diode_resistance: f64,
    /// Peak current rating of the clamp diode.
    pub diode_current_rating: f64,
    /// Largest permissible voltage difference driving the clamp.
    pub max_diff_voltage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClampSpec {
    Uniform(ClampParams),
    /// One entry per clamp (length `N - 1`), shared by both arms.
    PerClamp(Vec<ClampParams>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum LoadSpec {
    /// Prescribed output current `amplitude * sin(wt - load_angle)`.
    CurrentSource { amplitude: f64, load_angle: f64 },
    /// Series R-L from the ac terminal to the dc midpoint.
    SeriesRl { resistance: f64, inductance: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericsSpec {
    pub time_step: f64,
    pub duration: f64,
    pub diode_resolution_max_iters: usize,
    /// Record one trace row every this many steps.
    pub record_decimation: usize,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        Self {
            time_step: 1e-6,
            duration: 10.0,
            diode_resolution_max_iters: 64,
            record_decimation: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConverterConfig {
    pub modules_per_arm: usize,
    pub dc_voltage: f64,
    pub fundamental_freq: f64,
    pub switching_freq: f64,
    pub modulation_index: f64,
    pub total_displacement: f64,
    pub upper_arm_modules: Vec<ModuleParams>,
    pub lower_arm_modules: Vec<ModuleParams>,
    pub clamp: ClampSpec,
    pub switch: SwitchParams,
    /// Inductance of each arm (not the sum of both).
    pub arm_inductance: f64,
    pub arm_resistance: f64,
    pub load: LoadSpec,
    pub numerics: NumericsSpec,
}

impl ConverterConfig {
    /// Nominal module voltage `V_dc / N`.
    pub fn nominal_module_voltage(&self) -> f64 {
        nominal_module_voltage(self)
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.fundamental_freq
    }

    pub fn switching_period(&self) -> f64 {
        1.0 / self.switching_freq
    }

    /// Parameters of clamp `k` (0-based, `k < N - 1`).
    pub fn clamp_params(&self, k: usize) -> &ClampParams {
        match &self.clamp {
            ClampSpec::Uniform(p) => p,
            ClampSpec::PerClamp(v) => &v[k],
        }
    }

    pub fn arm_modules(&self, arm: crate::modulation::Arm) -> &[ModuleParams] {
        match arm {
            crate::modulation::Arm::Upper => &self.upper_arm_modules,
            crate::modulation::Arm::Lower => &self.lower_arm_modules,
        }
    }

    /// Phase-current amplitude and load angle seen by the arms.
    ///
    /// For the R-L load the amplitude follows from the fundamental ac voltage
    /// `m_a * V_dc / 2` driving the load in series with half the arm
    /// inductance.
    pub fn load_current(&self) -> (f64, f64) {
        match self.load {
            LoadSpec::CurrentSource {
                amplitude,
                load_angle,
            } => (amplitude, load_angle),
            LoadSpec::SeriesRl {
                resistance,
                inductance,
            } => {
                let x = self.omega() * (inductance + 0.5 * self.arm_inductance);
                let r = resistance + 0.5 * self.arm_resistance;
                let z = (r * r + x * x).sqrt();
                let v = self.modulation_index * self.dc_voltage / 2.0;
                if z == 0.0 {
                    (f64::INFINITY, 0.0)
                } else {
                    (v / z, x.atan2(r))
                }
            }
        }
    }

    /// Checks every invariant; see [`validate_config`].
    pub fn validated(self) -> Result<Self, ConfigError> {
        validate_config(&self)?;
        Ok(self)
    }
}

/// A single violated invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every violation found in a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid converter configuration")?;
        for v in &self.violations {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ConfigError {}

impl ConfigError {
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations
            .iter()
            .any(|v| v.message.contains(needle) || v.field.contains(needle))
    }
}

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn check(&mut self, ok: bool, field: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.violations.push(Violation {
                field: field.into(),
                message: message.into(),
            });
        }
    }
}

fn finite_nonneg(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn check_module(c: &mut Checker, arm: &str, j: usize, m: &ModuleParams) {
    let f = |name: &str| format!("{arm}_arm_modules[{j}].{name}");
    c.check(
        finite_pos(m.capacitance),
        f("capacitance"),
        "capacitance > 0 required",
    );
    c.check(finite_nonneg(m.esr), f("esr"), "esr >= 0 required");
    if let Some(r) = m.leak_resistance {
        c.check(
            finite_pos(r),
            f("leak_resistance"),
            "leak_resistance > 0 required",
        );
    }
    c.check(
        finite_nonneg(m.initial_voltage),
        f("initial_voltage"),
        "initial_voltage >= 0 required",
    );
}

fn check_clamp(c: &mut Checker, field: &str, p: &ClampParams) {
    let f = |name: &str| format!("{field}.{name}");
    c.check(
        finite_pos(p.inductance),
        f("inductance"),
        "inductance > 0 required",
    );
    c.check(
        finite_nonneg(p.inductor_resistance),
        f("inductor_resistance"),
        "inductor_resistance >= 0 required",
    );
    c.check(
        finite_nonneg(p.diode_drop),
        f("diode_drop"),
        "diode_drop >= 0 required",
    );
    c.check(
        finite_nonneg(p.diode_resistance),
        f("diode_resistance"),
        "diode_resistance >= 0 required",
    );
    c.check(
        finite_nonneg(p.diode_current_rating),
        f("diode_current_rating"),
        "diode_current_rating >= 0 required",
    );
    c.check(
        finite_nonneg(p.max_diff_voltage),
        f("max_diff_voltage"),
        "max_diff_voltage >= 0 required",
    );
}

/// Validates a configuration, reporting every violated invariant at once.
pub fn validate_config(cfg: &ConverterConfig) -> Result<(), ConfigError> {
    let mut c = Checker {
        violations: Vec::new(),
    };
    let n = cfg.modules_per_arm;
    c.check(n >= 2, "modules_per_arm", "modules_per_arm >= 2 required");
    c.check(
        finite_pos(cfg.dc_voltage),
        "dc_voltage",
        "dc_voltage > 0 required",
    );
    c.check(
        finite_pos(cfg.fundamental_freq),
        "fundamental_freq",
        "fundamental_freq > 0 required",
    );
    c.check(
        finite_pos(cfg.switching_freq),
        "switching_freq",
        "switching_freq > 0 required",
    );
    c.check(
        cfg.modulation_index.is_finite()
            && cfg.modulation_index > 0.0
            && cfg.modulation_index <= 1.0,
        "modulation_index",
        "0 < modulation_index <= 1 required",
    );
    c.check(
        finite_nonneg(cfg.total_displacement),
        "total_displacement",
        "total_displacement >= 0 required",
    );
    c.check(
        cfg.upper_arm_modules.len() == n,
        "upper_arm_modules",
        format!(
            "expected {n} modules, found {}",
            cfg.upper_arm_modules.len()
        ),
    );
    c.check(
        cfg.lower_arm_modules.len() == n,
        "lower_arm_modules",
        format!(
            "expected {n} modules, found {}",
            cfg.lower_arm_modules.len()
        ),
    );
    for (j, m) in cfg.upper_arm_modules.iter().enumerate() {
        check_module(&mut c, "upper", j, m);
    }
    for (j, m) in cfg.lower_arm_modules.iter().enumerate() {
        check_module(&mut c, "lower", j, m);
    }
    match &cfg.clamp {
        ClampSpec::Uniform(p) => check_clamp(&mut c, "clamp", p),
        ClampSpec::PerClamp(v) => {
            c.check(
                v.len() + 1 == n,
                "clamp",
                format!("expected {} clamps, found {}", n.saturating_sub(1), v.len()),
            );
            for (k, p) in v.iter().enumerate() {
                check_clamp(&mut c, &format!("clamp[{k}]"), p);
            }
        }
    }
    let s = &cfg.switch;
    c.check(
        finite_nonneg(s.on_drop),
        "switch.on_drop",
        "on_drop >= 0 required",
    );
    c.check(
        finite_nonneg(s.on_resistance),
        "switch.on_resistance",
        "on_resistance >= 0 required",
    );
    c.check(
        finite_nonneg(s.turn_on_time),
        "switch.turn_on_time",
        "turn_on_time >= 0 required",
    );
    c.check(
        finite_nonneg(s.turn_off_time),
        "switch.turn_off_time",
        "turn_off_time >= 0 required",
    );
    c.check(
        finite_pos(cfg.arm_inductance),
        "arm_inductance",
        "arm_inductance > 0 required",
    );
    c.check(
        finite_nonneg(cfg.arm_resistance),
        "arm_resistance",
        "arm_resistance >= 0 required",
    );
    match cfg.load {
        LoadSpec::CurrentSource {
            amplitude,
            load_angle,
        } => {
            c.check(
                finite_nonneg(amplitude),
                "load.amplitude",
                "amplitude >= 0 required",
            );
            c.check(
                load_angle.is_finite(),
                "load.load_angle",
                "load_angle must be finite",
            );
        }
        LoadSpec::SeriesRl {
            resistance,
            inductance,
        } => {
            c.check(
                finite_nonneg(resistance),
                "load.resistance",
                "resistance >= 0 required",
            );
            c.check(
                finite_nonneg(inductance),
                "load.inductance",
                "inductance >= 0 required",
            );
        }
    }
    let num = &cfg.numerics;
    c.check(
        finite_pos(num.time_step),
        "numerics.time_step",
        "time_step > 0 required",
    );
    if finite_pos(num.time_step) && finite_pos(cfg.switching_freq) {
        c.check(
            num.time_step <= 1.0 / (20.0 * cfg.switching_freq) * (1.0 + 1e-12),
            "numerics.time_step",
            "time_step too coarse: must not exceed 1/(20 f_sw)",
        );
    }
    c.check(
        finite_nonneg(num.duration),
        "numerics.duration",
        "duration >= 0 required",
    );
    c.check(
        num.diode_resolution_max_iters >= 1,
        "numerics.diode_resolution_max_iters",
        "at least one diode resolution iteration required",
    );
    c.check(
        num.record_decimation >= 1,
        "numerics.record_decimation",
        "record_decimation >= 1 required",
    );
    if c.violations.is_empty() {
        Ok(())
    } else {
        Err(ConfigError {
            violations: c.violations,
        })
    }
}

/// `V_dc / N`.
pub fn nominal_module_voltage(cfg: &ConverterConfig) -> f64 {
    cfg.dc_voltage / cfg.modules_per_arm as f64
}

/// Capacitance/ESR spread used by the mismatched-arm scenario.
///
/// Module `j` (1-based) gets `C_j = (1.3 - 0.6 (N-j)/(N-1)) C` and
/// `r_j = (0.7 + 0.6 (N-j)/(N-1)) r`, so the capacitance rises and the ESR
/// falls towards the ac end of the arm. Initial voltages are left at zero;
/// callers set them.
pub fn synthesize_mismatched_modules(
    n: usize,
    base_capacitance: f64,
    base_esr: f64,
) -> Vec<ModuleParams> {
    spread_modules(n, base_capacitance, base_esr, 0.3)
}

/// Linear spread of `±tolerance` around the base values, capacitance rising
/// and ESR falling with `j`. `tolerance = 0.3` is the mismatched-arm case.
pub fn spread_modules(n: usize, base_capacitance: f64, base_esr: f64, tolerance: f64) -> Vec<ModuleParams> {
    assert!(n >= 2, "at least two modules required");
    let span = (n - 1) as f64;
    let (lo, hi) = (1.0 - tolerance, 1.0 + tolerance);
    (1..=n)
        .map(|j| {
            let x = (n - j) as f64 / span;
            let w = 2.0 * tolerance * x;
            ModuleParams::new((hi - w) * base_capacitance, (lo + w) * base_esr, 0.0)
        })
        .collect()
}

/// Ready-made parameter sets.
///
/// Device drops, resistances, switching times and the load are not part of
/// the published parameter table; the values chosen here are listed in the
/// README next to the preset names.
pub mod presets {
    use super::*;

    pub const TABLE2_SIM_MODULES: usize = 40;
    pub const TABLE2_SIM_DC_VOLTAGE: f64 = 24e3;
    pub const TABLE2_SIM_CAPACITANCE: f64 = 15e-3;
    pub const TABLE2_SIM_ARM_INDUCTANCE: f64 = 10e-3;
    pub const TABLE2_SIM_CLAMP_INDUCTANCE: f64 = 10e-6;
    pub const TABLE2_SIM_SWITCHING_FREQ: f64 = 5e3;

    pub const TABLE2_EXP_MODULES: usize = 8;
    pub const TABLE2_EXP_DC_VOLTAGE: f64 = 120.0;
    pub const TABLE2_EXP_CAPACITANCE: f64 = 4.9e-3;
    pub const TABLE2_EXP_ARM_INDUCTANCE: f64 = 2e-3;
    pub const TABLE2_EXP_CLAMP_INDUCTANCE: f64 = 7.5e-6;
    pub const TABLE2_EXP_SWITCHING_FREQ: f64 = 10e3;

    /// Capacitor ESR of the simulated modules.
    pub const SIM_BASE_ESR: f64 = 1e-3;
    /// Phase-current amplitude of the default prescribed-current load.
    pub const SIM_LOAD_AMPLITUDE: f64 = 100.0;

    /// Self-discharge resistors: (1-based module, upper/lower, ohms).
    pub const TABLE3_LEAKS: [(usize, bool, f64); 8] = [
        (4, true, 32e3),
        (9, true, 28e3),
        (14, true, 24e3),
        (19, true, 20e3),
        (4, false, 16e3),
        (9, false, 12e3),
        (14, false, 8e3),
        (19, false, 4e3),
    ];

    /// Forward drop of switches and clamp diodes in the simulation presets.
    /// Each clamped pair settles about two drops apart, so with 40 modules
    /// the drops must stay well below 0.46 V for a 3 % band to be reachable.
    pub const SIM_DEVICE_DROP: f64 = 0.05;

    pub fn sim_switch() -> SwitchParams {
        SwitchParams {
            on_drop: SIM_DEVICE_DROP,
            on_resistance: 1e-3,
            turn_on_time: 0.2e-6,
            turn_off_time: 0.4e-6,
        }
    }

    pub fn sim_clamp() -> ClampParams {
        ClampParams {
            inductance: TABLE2_SIM_CLAMP_INDUCTANCE,
            inductor_resistance: 1e-3,
            diode_drop: SIM_DEVICE_DROP,
            diode_resistance: 1e-3,
            diode_current_rating: 300.0,
            max_diff_voltage: 6.0,
        }
    }

    /// Simulation column: N = 40, 24 kV, 15 mF, 50 Hz, m = 0.95, 5 kHz,
    /// 10 mH arm inductor, 10 uH clamp inductor.
    pub fn table2_sim() -> ConverterConfig {
        let n = TABLE2_SIM_MODULES;
        let vm = TABLE2_SIM_DC_VOLTAGE / n as f64;
        let module = ModuleParams::new(TABLE2_SIM_CAPACITANCE, SIM_BASE_ESR, vm);
        ConverterConfig {
            modules_per_arm: n,
            dc_voltage: TABLE2_SIM_DC_VOLTAGE,
            fundamental_freq: 50.0,
            switching_freq: TABLE2_SIM_SWITCHING_FREQ,
            modulation_index: 0.95,
            total_displacement: 0.0,
            upper_arm_modules: vec![module.clone(); n],
            lower_arm_modules: vec![module; n],
            clamp: ClampSpec::Uniform(sim_clamp()),
            switch: sim_switch(),
            arm_inductance: TABLE2_SIM_ARM_INDUCTANCE,
            arm_resistance: 0.05,
            load: LoadSpec::CurrentSource {
                amplitude: SIM_LOAD_AMPLITUDE,
                load_angle: 0.0,
            },
            numerics: NumericsSpec {
                time_step: 1e-6,
                duration: 10.0,
                diode_resolution_max_iters: 64,
                record_decimation: 200,
            },
        }
    }

    /// Mismatched capacitors and ESRs in both arms.
    pub fn mismatch() -> ConverterConfig {
        let mut cfg = table2_sim();
        let vm = cfg.nominal_module_voltage();
        let mut mods =
            synthesize_mismatched_modules(cfg.modules_per_arm, TABLE2_SIM_CAPACITANCE, SIM_BASE_ESR);
        for m in &mut mods {
            m.initial_voltage = vm;
        }
        cfg.upper_arm_modules = mods.clone();
        cfg.lower_arm_modules = mods;
        cfg
    }

    /// Mismatched modules plus the self-discharge resistors of the modified
    /// simulation set.
    pub fn table3_leaky() -> ConverterConfig {
        let mut cfg = mismatch();
        for &(j, upper, r) in TABLE3_LEAKS.iter() {
            let arm = if upper {
                &mut cfg.upper_arm_modules
            } else {
                &mut cfg.lower_arm_modules
            };
            arm[j - 1].leak_resistance = Some(r);
        }
        cfg
    }

    /// Experiment column: N = 8, 120 V, 4.9 mF, 50 Hz, m = 0.95, 10 kHz,
    /// 2 mH arm inductor, 7.5 uH clamp inductor.
    pub fn table2_experiment() -> ConverterConfig {
        let n = TABLE2_EXP_MODULES;
        let vm = TABLE2_EXP_DC_VOLTAGE / n as f64;
        let module = ModuleParams::new(TABLE2_EXP_CAPACITANCE, 2e-3, vm);
        ConverterConfig {
            modules_per_arm: n,
            dc_voltage: TABLE2_EXP_DC_VOLTAGE,
            fundamental_freq: 50.0,
            switching_freq: TABLE2_EXP_SWITCHING_FREQ,
            modulation_index: 0.95,
            total_displacement: 0.02,
            upper_arm_modules: vec![module.clone(); n],
            lower_arm_modules: vec![module; n],
            clamp: ClampSpec::Uniform(ClampParams {
                inductance: TABLE2_EXP_CLAMP_INDUCTANCE,
                inductor_resistance: 0.0,
                diode_drop: 0.5,
                diode_resistance: 5e-3,
                diode_current_rating: 20.0,
                max_diff_voltage: 0.15,
            }),
            switch: SwitchParams {
                on_drop: 0.5,
                on_resistance: 5e-3,
                turn_on_time: 50e-9,
                turn_off_time: 50e-9,
            },
            arm_inductance: TABLE2_EXP_ARM_INDUCTANCE,
            arm_resistance: 0.05,
            load: LoadSpec::CurrentSource {
                amplitude: 10.0,
                load_angle: 0.0,
            },
            numerics: NumericsSpec {
                time_step: 0.5e-6,
                duration: 1.0,
                diode_resolution_max_iters: 64,
                record_decimation: 100,
            },
        }
    }
}

/// Instantaneous state of one arm.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmState {
    pub cap_voltages: Vec<f64>,
    /// Clamp inductor currents, never negative.
    pub clamp_currents: Vec<f64>,
    /// `true` when the module is inserted (upper switch on).
    pub gate_series: Vec<bool>,
}

impl ArmState {
    pub fn from_modules(modules: &[ModuleParams]) -> Self {
        let n = modules.len();
        Self {
            cap_voltages: modules.iter().map(|m| m.initial_voltage).collect(),
            clamp_currents: vec![0.0; n.saturating_sub(1)],
            gate_series: vec![false; n],
        }
    }
}

/// Instantaneous state of the whole leg.
#[derive(Clone, Debug, PartialEq)]
pub struct ConverterState {
    pub time: f64,
    pub upper: ArmState,
    pub lower: ArmState,
    /// Flows from the positive rail into the ac terminal.
    pub arm_current_upper: f64,
    /// Flows from the ac terminal into the negative rail.
    pub arm_current_lower: f64,
    /// Leaves the ac terminal into the load; equals upper minus lower.
    pub output_current: f64,
}

impl ConverterState {
    /// Start-up state: module voltages from the configuration, no clamp
    /// current, arm currents on their steady-state trajectory at `t = 0`.
    pub fn initial(cfg: &ConverterConfig) -> Self {
        let (ip, phi) = cfg.load_current();
        let k = 2.0 / (cfg.modulation_index * phi.cos());
        let i_out = ip * (-phi).sin();
        let i_dc = if k.is_finite() && ip.is_finite() {
            ip / (2.0 * k)
        } else {
            0.0
        };
        let i_out = if i_out.is_finite() { i_out } else { 0.0 };
        Self {
            time: 0.0,
            upper: ArmState::from_modules(&cfg.upper_arm_modules),
            lower: ArmState::from_modules(&cfg.lower_arm_modules),
            arm_current_upper: i_dc + 0.5 * i_out,
            arm_current_lower: i_dc - 0.5 * i_out,
            output_current: i_out,
        }
    }
}
