//! Scenario files.
//!
//! A scenario names a base parameter set and overrides parts of it. Every
//! key is optional except `name` and `preset`, and unknown keys are
//! rejected at every level. Parsing and emitting preserve the tree: a file
//! that is parsed and written back yields the same TOML value.

use std::path::Path;

use lapsc_core::model::{presets, spread_modules, ClampSpec, ConverterConfig, LoadSpec};
use lapsc_core::sim::{DisplacementSchedule, RunPlan};
use lapsc_core::{design::DesignInputs, DelayModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("invalid configuration: {0}")]
    Config(#[from] lapsc_core::model::ConfigError),
}

/// Built-in parameter sets a scenario can start from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasePreset {
    #[serde(rename = "table2-sim")]
    Table2Sim,
    #[serde(rename = "table2-experiment")]
    Table2Experiment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayKind {
    None,
    ZeroOrderHold,
}

impl From<DelayKind> for DelayModel {
    fn from(d: DelayKind) -> Self {
        match d {
            DelayKind::None => DelayModel::None,
            DelayKind::ZeroOrderHold => DelayModel::ZeroOrderHold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub preset: BasePreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_model: Option<DelayKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<DisplacementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modules_per_arm: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_voltage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fundamental_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switching_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation_index: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_inductance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm_resistance: Option<f64>,
    /// Rated module capacitance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacitance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esr: Option<f64>,
    /// Linear ±spread of capacitance and ESR along each arm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch_tolerance: Option<f64>,
    /// Uniform initial voltage; defaults to `dc_voltage / modules_per_arm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_voltage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_initial_voltages: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_initial_voltages: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaks: Option<Vec<LeakSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<ClampOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<LoadOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<NumericsOverrides>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmName {
    Upper,
    Lower,
}

/// Self-discharge resistor across module `module` (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakSpec {
    pub module: usize,
    pub arm: ArmName,
    pub resistance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on_drop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on_resistance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_on_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_off_time: Option<f64>,
}

/// Applied to every clamp.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClampOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inductance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inductor_resistance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diode_drop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diode_resistance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diode_current_rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_diff_voltage: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    CurrentSource,
    SeriesRl,
}

/// `current_source` takes `amplitude` and `load_angle`; `series_rl` takes
/// `resistance` and `inductance`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<LoadKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inductance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diode_resolution_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_decimation: Option<usize>,
}

/// Piecewise-constant displacement: `initial`, then each step's `value`
/// from its `at` time on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<DisplacementStep>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementStep {
    pub at: f64,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write the CSV trace (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_currents: Option<bool>,
    /// Cycles of full-rate output voltage kept for THD.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thd_cycles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thd_bandwidth: Option<f64>,
    /// Cycles averaged for the simulated losses; defaults to the second
    /// half of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_cycles: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consecutive: Option<usize>,
    /// Ignore cycles before this time when detecting convergence; defaults
    /// to the last displacement step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_after: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_diff_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_d_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<f64>,
}

/// Shipped scenario files, by name.
pub const SHIPPED: [(&str, &str); 3] = [
    ("table2-sim", include_str!("../presets/table2-sim.toml")),
    ("table3-leaky", include_str!("../presets/table3-leaky.toml")),
    ("mismatch-step", include_str!("../presets/mismatch-step.toml")),
];

pub fn shipped(name: &str) -> Option<&'static str> {
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    s.check()?;
    Ok(s)
}

pub fn emit_scenario(s: &Scenario) -> String {
    toml::to_string(s).expect("scenario serializes")
}

/// Reads `arg` as a path, or as the name of a shipped scenario when no such
/// file exists.
pub fn load_scenario(arg: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(text) = shipped(arg) {
            return parse_scenario(text);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: arg.to_string(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| match e {
        ScenarioError::Parse(m) => ScenarioError::Parse(format!("{arg}: {m}")),
        e => e,
    })
}

/// A scenario turned into core inputs.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ConverterConfig,
    pub plan: RunPlan,
    pub design: DesignInputs,
    pub outputs: OutputSpec,
}

impl Scenario {
    fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        if let Some(d) = &self.displacement {
            let values = d.initial.iter().chain(d.steps.iter().flatten().map(|s| &s.value));
            if let Some(v) = values.clone().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return bad(format!("displacement values must be finite and >= 0, got {v}"));
            }
            for st in d.steps.iter().flatten() {
                if !(st.at.is_finite() && st.at >= 0.0) {
                    return bad(format!("displacement step time must be >= 0, got {}", st.at));
                }
            }
        }
        Ok(())
    }

    pub fn delay(&self) -> DelayModel {
        self.delay_model.unwrap_or(DelayKind::None).into()
    }

    /// Displacement in force at the end of the schedule.
    pub fn final_displacement(&self, cfg: &ConverterConfig) -> f64 {
        let d = self.displacement.clone().unwrap_or_default();
        d.steps
            .as_ref()
            .and_then(|s| s.iter().max_by(|a, b| a.at.total_cmp(&b.at)))
            .map(|s| s.value)
            .or(d.initial)
            .unwrap_or(cfg.total_displacement)
    }

    /// Replaces the schedule by a constant displacement.
    pub fn set_constant_displacement(&mut self, delta_a: f64) {
        self.displacement = Some(DisplacementSpec {
            initial: Some(delta_a),
            steps: None,
        });
    }

    /// Sets the displacement reached at the end of the schedule, keeping
    /// earlier steps.
    pub fn set_final_displacement(&mut self, delta_a: f64) {
        let d = self.displacement.get_or_insert_with(Default::default);
        match d.steps.as_mut().and_then(|s| s.iter_mut().max_by(|a, b| a.at.total_cmp(&b.at))) {
            Some(last) => last.value = delta_a,
            None => d.initial = Some(delta_a),
        }
    }

    /// Zero displacement throughout; the paired baseline of a loss study.
    pub fn without_displacement(&self) -> Scenario {
        let mut s = self.clone();
        s.set_constant_displacement(0.0);
        s
    }

    pub fn config_mut(&mut self) -> &mut ConfigOverrides {
        self.config.get_or_insert_with(Default::default)
    }

    pub fn set_duration(&mut self, duration: f64) {
        self.config_mut().numerics.get_or_insert_with(Default::default).duration = Some(duration);
    }

    pub fn resolve(&self) -> Result<Resolved, ScenarioError> {
        let config = self.build_config()?;
        let d = self.displacement.clone().unwrap_or_default();
        let initial = d.initial.unwrap_or(config.total_displacement);
        let changes: Vec<(f64, f64)> = d.steps.iter().flatten().map(|s| (s.at, s.value)).collect();
        let duration = config.numerics.duration;
        if let Some(&(t, _)) = changes.iter().find(|(t, _)| *t > duration) {
            return Err(ScenarioError::Invalid(format!(
                "displacement step at {t} s lies beyond the {duration} s duration"
            )));
        }
        let last_change = changes.iter().map(|c| c.0).fold(0.0, f64::max);
        let schedule = DisplacementSchedule::from_changes(initial, changes)
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let mut outputs = self.outputs.clone().unwrap_or_default();
        outputs.convergence_after.get_or_insert(last_change);
        let thd_cycles = outputs.thd_cycles.unwrap_or(lapsc_core::metrics::MIN_THD_CYCLES);
        let plan = RunPlan {
            duration,
            schedule,
            delay: self.delay(),
            record_decimation: config.numerics.record_decimation,
            record_clamp_currents: outputs.clamp_currents.unwrap_or(false),
            output_capture: None,
        }
        .capture_last_cycles(&config, thd_cycles as f64);
        let ds = self.design.clone().unwrap_or_default();
        let cfg_tol = self.config.as_ref().and_then(|c| c.mismatch_tolerance);
        let design = DesignInputs {
            tolerance: ds.tolerance.or(cfg_tol).unwrap_or(DesignInputs::default().tolerance),
            u_diff_max: ds.u_diff_max,
            i_d_max: ds.i_d_max,
            delta_a: ds.delta_a,
        };
        Ok(Resolved {
            config,
            plan,
            design,
            outputs,
        })
    }

    fn build_config(&self) -> Result<ConverterConfig, ScenarioError> {
        let mut cfg = match self.preset {
            BasePreset::Table2Sim => presets::table2_sim(),
            BasePreset::Table2Experiment => presets::table2_experiment(),
        };
        let o = self.config.clone().unwrap_or_default();
        let base_module = cfg.upper_arm_modules[0].clone();
        set(&mut cfg.modules_per_arm, o.modules_per_arm);
        set(&mut cfg.dc_voltage, o.dc_voltage);
        set(&mut cfg.fundamental_freq, o.fundamental_freq);
        set(&mut cfg.switching_freq, o.switching_freq);
        set(&mut cfg.modulation_index, o.modulation_index);
        set(&mut cfg.arm_inductance, o.arm_inductance);
        set(&mut cfg.arm_resistance, o.arm_resistance);
        cfg.total_displacement = self.final_displacement(&cfg);

        let n = cfg.modules_per_arm;
        if n < 2 {
            return Err(ScenarioError::Invalid(format!("modules_per_arm must be >= 2, got {n}")));
        }
        let c = o.capacitance.unwrap_or(base_module.capacitance);
        let esr = o.esr.unwrap_or(base_module.esr);
        let mut modules = spread_modules(n, c, esr, o.mismatch_tolerance.unwrap_or(0.0));
        let v0 = o.initial_voltage.unwrap_or(cfg.dc_voltage / n as f64);
        for m in &mut modules {
            m.initial_voltage = v0;
        }
        cfg.upper_arm_modules = modules.clone();
        cfg.lower_arm_modules = modules;
        for (arm, v) in [
            (&mut cfg.upper_arm_modules, &o.upper_initial_voltages),
            (&mut cfg.lower_arm_modules, &o.lower_initial_voltages),
        ] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(ScenarioError::Invalid(format!(
                        "initial voltage list has {} entries for {n} modules",
                        v.len()
                    )));
                }
                for (m, &u) in arm.iter_mut().zip(v) {
                    m.initial_voltage = u;
                }
            }
        }
        for leak in o.leaks.iter().flatten() {
            if !(1..=n).contains(&leak.module) {
                return Err(ScenarioError::Invalid(format!(
                    "leak on module {} outside 1..={n}",
                    leak.module
                )));
            }
            let arm = match leak.arm {
                ArmName::Upper => &mut cfg.upper_arm_modules,
                ArmName::Lower => &mut cfg.lower_arm_modules,
            };
            arm[leak.module - 1].leak_resistance = Some(leak.resistance);
        }

        if let Some(s) = &o.switch {
            set(&mut cfg.switch.on_drop, s.on_drop);
            set(&mut cfg.switch.on_resistance, s.on_resistance);
            set(&mut cfg.switch.turn_on_time, s.turn_on_time);
            set(&mut cfg.switch.turn_off_time, s.turn_off_time);
        }
        if let Some(c) = &o.clamp {
            let mut p = cfg.clamp_params(0).clone();
            set(&mut p.inductance, c.inductance);
            set(&mut p.inductor_resistance, c.inductor_resistance);
            set(&mut p.diode_drop, c.diode_drop);
            set(&mut p.diode_resistance, c.diode_resistance);
            set(&mut p.diode_current_rating, c.diode_current_rating);
            set(&mut p.max_diff_voltage, c.max_diff_voltage);
            cfg.clamp = ClampSpec::Uniform(p);
        }
        if let Some(l) = &o.load {
            cfg.load = resolve_load(&cfg.load, l)?;
        }
        if let Some(nu) = &o.numerics {
            set(&mut cfg.numerics.time_step, nu.time_step);
            set(&mut cfg.numerics.duration, nu.duration);
            set(&mut cfg.numerics.diode_resolution_max_iters, nu.diode_resolution_max_iters);
            set(&mut cfg.numerics.record_decimation, nu.record_decimation);
        }
        Ok(cfg.validated()?)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn resolve_load(base: &LoadSpec, o: &LoadOverrides) -> Result<LoadSpec, ScenarioError> {
    let kind = o.kind.unwrap_or(match base {
        LoadSpec::CurrentSource { .. } => LoadKind::CurrentSource,
        LoadSpec::SeriesRl { .. } => LoadKind::SeriesRl,
    });
    let misplaced = |what: &str| {
        Err(ScenarioError::Invalid(format!("load key `{what}` does not apply to this load kind")))
    };
    match kind {
        LoadKind::CurrentSource => {
            if o.resistance.is_some() {
                return misplaced("resistance");
            }
            if o.inductance.is_some() {
                return misplaced("inductance");
            }
            let (mut amplitude, mut load_angle) = match *base {
                LoadSpec::CurrentSource { amplitude, load_angle } => (amplitude, load_angle),
                LoadSpec::SeriesRl { .. } => (0.0, 0.0),
            };
            set(&mut amplitude, o.amplitude);
            set(&mut load_angle, o.load_angle);
            Ok(LoadSpec::CurrentSource { amplitude, load_angle })
        }
        LoadKind::SeriesRl => {
            if o.amplitude.is_some() {
                return misplaced("amplitude");
            }
            if o.load_angle.is_some() {
                return misplaced("load_angle");
            }
            let (mut resistance, mut inductance) = match *base {
                LoadSpec::SeriesRl { resistance, inductance } => (resistance, inductance),
                LoadSpec::CurrentSource { .. } => (0.0, 0.0),
            };
            set(&mut resistance, o.resistance);
            set(&mut inductance, o.inductance);
            Ok(LoadSpec::SeriesRl { resistance, inductance })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_resolves_to_base() {
        let s = parse_scenario("name = \"x\"\npreset = \"table2-sim\"\n").unwrap();
        let r = s.resolve().unwrap();
        assert_eq!(r.config, presets::table2_sim());
        assert_eq!(r.plan.delay, DelayModel::None);
        assert_eq!(r.outputs.convergence_after, Some(0.0));
    }

    #[test]
    fn step_beyond_duration_is_rejected() {
        let text = "name = \"x\"\npreset = \"table2-sim\"\n[config.numerics]\nduration = 1.0\n\
                    [displacement]\nsteps = [{ at = 2.0, value = 0.02 }]\n";
        let err = parse_scenario(text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("beyond"), "{err}");
    }

    #[test]
    fn negative_displacement_is_rejected() {
        let text = "name = \"x\"\npreset = \"table2-sim\"\n[displacement]\ninitial = -0.1\n";
        assert!(matches!(parse_scenario(text), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn final_displacement_follows_last_step() {
        let mut s = parse_scenario(shipped("mismatch-step").unwrap()).unwrap();
        let cfg = presets::table2_sim();
        assert_eq!(s.final_displacement(&cfg), 0.02);
        s.set_final_displacement(0.005);
        assert_eq!(s.final_displacement(&cfg), 0.005);
        assert_eq!(s.displacement.as_ref().unwrap().initial, Some(0.0));
        assert_eq!(s.without_displacement().final_displacement(&cfg), 0.0);
    }

    #[test]
    fn load_keys_must_match_kind() {
        let text = "name = \"x\"\npreset = \"table2-sim\"\n[config.load]\nresistance = 10.0\n";
        assert!(parse_scenario(text).unwrap().resolve().is_err());
        let text = "name = \"x\"\npreset = \"table2-sim\"\n[config.load]\nkind = \"series_rl\"\n\
                    resistance = 100.0\ninductance = 0.01\n";
        let cfg = parse_scenario(text).unwrap().resolve().unwrap().config;
        assert_eq!(cfg.load, LoadSpec::SeriesRl { resistance: 100.0, inductance: 0.01 });
    }

    #[test]
    fn invalid_config_reports_violations() {
        let text = "name = \"x\"\npreset = \"table2-sim\"\n[config]\nmodulation_index = 1.5\n";
        let err = parse_scenario(text).unwrap().resolve().unwrap_err();
        assert!(matches!(err, ScenarioError::Config(_)), "{err}");
    }
}
