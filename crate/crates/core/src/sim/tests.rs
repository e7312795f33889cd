use super::*;
use crate::modulation::GateFrame;
use crate::clamp::{transient_solution, ClampTransientParams};
use crate::model::{presets, ArmState, LoadSpec};
use std::vec;

/// Two-module leg where only the upper clamp can conduct and the arm
/// current stays at zero: module 1 inserted, module 2 bypassed and charged
/// `diff` volts above module 1.
fn isolated_clamp(dt: f64, diff: f64) -> (ConverterConfig, Simulator) {
    let mut cfg = presets::table2_sim();
    let vm = 600.0;
    cfg.modules_per_arm = 2;
    cfg.dc_voltage = 2.0 * vm;
    let module = cfg.upper_arm_modules[0].clone();
    cfg.upper_arm_modules = vec![module.clone(); 2];
    cfg.lower_arm_modules = vec![module; 2];
    cfg.arm_inductance = 1e6;
    cfg.load = LoadSpec::CurrentSource {
        amplitude: 0.0,
        load_angle: 0.0,
    };
    cfg.numerics.time_step = dt;
    let mut upper = ArmState::from_modules(&cfg.upper_arm_modules);
    upper.cap_voltages = vec![vm, vm + diff];
    let mut lower = ArmState::from_modules(&cfg.lower_arm_modules);
    lower.cap_voltages = vec![vm, vm];
    let state = ConverterState {
        time: 0.0,
        upper,
        lower,
        arm_current_upper: 0.0,
        arm_current_lower: 0.0,
        output_current: 0.0,
    };
    let mut sim = Simulator::with_state(&cfg, state).unwrap();
    sim.set_gates(&[true, false], &[true, false]);
    (cfg, sim)
}

fn loop_params(cfg: &ConverterConfig, diff: f64) -> ClampTransientParams {
    let m = &cfg.upper_arm_modules;
    ClampTransientParams::from_devices(
        m[0].capacitance,
        m[1].capacitance,
        m[0].esr,
        cfg.clamp_params(0),
        &cfg.switch,
        600.0,
        600.0 + diff,
    )
}

fn oscillation_period(p: &ClampTransientParams) -> f64 {
    2.0 * core::f64::consts::PI * (p.inductance * p.effective_capacitance).sqrt()
}

/// Largest deviation from the closed form over the first conduction
/// interval, relative to the closed-form peak.
fn clamp_error(steps_per_period: f64) -> f64 {
    let diff = 5.0;
    let (cfg0, _) = isolated_clamp(1e-6, diff);
    let p = loop_params(&cfg0, diff);
    let sol = transient_solution(&p).unwrap();
    let dt = oscillation_period(&p) / steps_per_period;
    let (_, mut sim) = isolated_clamp(dt, diff);
    let peak = sol.current(sol.peak_time());
    let mut worst: f64 = 0.0;
    let half = (core::f64::consts::PI / sol.omega_d / dt) as usize;
    for k in 1..half {
        sim.step(&[true, false], &[true, false]).unwrap();
        let i = sim.state().upper.clamp_currents[0];
        worst = worst.max((i - sol.current(k as f64 * dt)).abs());
        assert!(sim.state().arm_current_upper.abs() < 1e-6);
    }
    worst / peak
}

#[test]
fn isolated_clamp_matches_closed_form() {
    let e = clamp_error(2000.0);
    assert!(e < 5e-3, "relative error {e}");
}

#[test]
fn first_order_convergence() {
    let e: Vec<f64> = [250.0, 500.0, 1000.0].iter().map(|&s| clamp_error(s)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 0.9, "order {order} from {e:?}");
    }
}

#[test]
fn turn_off_slope() {
    let diff = 5.0;
    let (cfg, _) = isolated_clamp(1e-6, diff);
    let p = loop_params(&cfg, diff);
    let sol = transient_solution(&p).unwrap();
    let (_, mut sim) = isolated_clamp(oscillation_period(&p) / 2000.0, diff);
    while sim.state().time < sol.peak_time() {
        sim.step(&[true, false], &[true, false]).unwrap();
        let t = sim.state().time + sim.time_step();
        sim.sync_time(t);
    }
    let dt = 1e-9;
    sim.set_time_step(dt);
    let i0 = sim.state().upper.clamp_currents[0];
    let u1 = sim.state().upper.cap_voltages[0];
    sim.step(&[true, true], &[true, false]).unwrap();
    let i1 = sim.state().upper.clamp_currents[0];
    sim.step(&[true, true], &[true, false]).unwrap();
    let i2 = sim.state().upper.clamp_currents[0];
    assert!(i2 > 0.0 && i1 < i0);
    let expect = -(u1 + cfg.clamp_params(0).diode_drop) / cfg.clamp_params(0).inductance;
    let slope = (i2 - i1) / dt;
    assert!((slope - expect).abs() < 0.01 * expect.abs(), "{slope} vs {expect}");
}

#[test]
fn leak_decay() {
    let (mut cfg, _) = isolated_clamp(1e-6, 0.0);
    cfg.switching_freq = 100.0;
    cfg.numerics.time_step = 1e-4;
    let r = 100.0;
    for m in cfg.upper_arm_modules.iter_mut() {
        m.leak_resistance = Some(r);
    }
    cfg.dc_voltage = 1e-6;
    let mut st = ConverterState::initial(&cfg);
    st.upper.cap_voltages = vec![600.0, 600.0];
    st.lower.cap_voltages = vec![600.0, 600.0];
    st.arm_current_upper = 0.0;
    st.arm_current_lower = 0.0;
    st.output_current = 0.0;
    let mut sim = Simulator::with_state(&cfg, st).unwrap();
    let gates = [false, false];
    sim.set_gates(&gates, &gates);
    for _ in 0..10_000 {
        sim.step(&gates, &gates).unwrap();
    }
    let tau = r * cfg.upper_arm_modules[0].capacitance;
    let expect = 600.0 * (-1.0 / tau).exp();
    for &u in &sim.state().upper.cap_voltages {
        assert!((u - expect).abs() < 2e-4 * 600.0, "{u} vs {expect}");
    }
    assert_eq!(sim.state().lower.cap_voltages, vec![600.0, 600.0]);
    assert_eq!(sim.state().upper.clamp_currents, vec![0.0]);
}

fn short_plan(cfg: &ConverterConfig, duration: f64, delta: f64) -> RunPlan {
    RunPlan {
        duration,
        schedule: DisplacementSchedule::constant(delta),
        delay: DelayModel::ZeroOrderHold,
        record_decimation: 50,
        record_clamp_currents: true,
        output_capture: None,
    }
    .capture_last_cycles(cfg, 1.0)
}

#[test]
fn energy_audit_and_complementarity() {
    let cfg = presets::table2_sim();
    let trace = simulate(&cfg, &short_plan(&cfg, 0.1, 0.02)).unwrap();
    let e = trace.final_energy;
    let residual = e.source - e.load - e.dissipated() - (trace.final_stored - trace.initial_stored);
    assert!(residual.abs() < 1e-3 * e.source.abs(), "residual {residual} of {}", e.source);
    assert_eq!(trace.complementarity_violations, 0);
    assert_eq!(trace.halved_steps, 0);
    for row in trace.rows() {
        assert!(row.clamp_currents().iter().all(|&i| i >= 0.0));
        assert_eq!(row.clamp_currents().len(), 78);
    }
    assert_eq!(trace.cycle_means.len(), 5);
    let cap = trace.output_capture.as_ref().unwrap();
    assert_eq!(cap.samples.len(), 20_000);
    for c in &[
        e.switch_conduction,
        e.diode,
        e.capacitor_esr,
        e.clamp_inductor,
        e.arm_resistance,
        e.switching,
    ] {
        assert!(*c >= 0.0);
    }
}

#[test]
fn reruns_are_identical() {
    let mut cfg = presets::mismatch();
    cfg.modules_per_arm = 8;
    cfg.upper_arm_modules.truncate(8);
    cfg.lower_arm_modules.truncate(8);
    cfg.dc_voltage = 8.0 * 600.0;
    let plan = short_plan(&cfg, 0.04, 0.02);
    let a = simulate(&cfg, &plan).unwrap();
    let b = simulate(&cfg, &plan).unwrap();
    assert_eq!(a, b);
}

#[test]
fn free_step_matches_simulator() {
    let cfg = presets::table2_sim();
    let mut sim = Simulator::new(&cfg).unwrap();
    let n = cfg.modules_per_arm;
    let gu: Vec<bool> = (0..n).map(|j| j % 2 == 0).collect();
    let gl: Vec<bool> = (0..n).map(|j| j % 3 == 0).collect();
    let frame = |g: &[bool]| GateFrame {
        time: 0.0,
        series_flags: g.to_vec(),
    };
    let (next, _) = step(
        &cfg,
        sim.state(),
        (&frame(&gu), &frame(&gl)),
        cfg.numerics.time_step,
    )
    .unwrap();
    sim.step(&gu, &gl).unwrap();
    assert_eq!(&next.upper.cap_voltages, &sim.state().upper.cap_voltages);
    assert_eq!(next.arm_current_upper, sim.state().arm_current_upper);
}

#[test]
fn schedule_values() {
    let s = DisplacementSchedule::step(0.0, 5.0, 0.02);
    assert_eq!(s.value_at(4.999), 0.0);
    assert_eq!(s.value_at(5.0), 0.02);
    assert_eq!(s.value_at(9.0), 0.02);
    let s = DisplacementSchedule::from_changes(0.01, vec![(2.0, 0.03), (1.0, 0.0)]).unwrap();
    assert_eq!(s.changes(), &[(1.0, 0.0), (2.0, 0.03)]);
    assert_eq!(s.value_at(1.5), 0.0);
    assert!(DisplacementSchedule::from_changes(0.0, vec![(1.0, -0.1)]).is_err());
    assert!(DisplacementSchedule::from_changes(f64::NAN, vec![]).is_err());
}

#[test]
fn rejects_bad_plans_and_states() {
    let cfg = presets::table2_sim();
    let mut plan = RunPlan::from_config(&cfg);
    plan.duration = 0.0;
    assert!(matches!(simulate(&cfg, &plan), Err(SimError::Plan(_))));
    let mut st = ConverterState::initial(&cfg);
    st.upper.cap_voltages.pop();
    assert_eq!(Simulator::with_state(&cfg, st).err(), Some(SimError::StateShape));
}
