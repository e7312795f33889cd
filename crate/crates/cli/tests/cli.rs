use std::process::Command;

use lapsc::core::model::presets;
use lapsc::run::{self, Axis};
use lapsc::scenario::{emit_scenario, load_scenario, parse_scenario, shipped, ScenarioError, SHIPPED};

fn short(name: &str, duration: f64) -> lapsc::scenario::Scenario {
    let mut s = load_scenario(name).unwrap();
    s.set_duration(duration);
    s
}

#[test]
fn table2_sim_matches_parameter_table() {
    let r = load_scenario("table2-sim").unwrap().resolve().unwrap();
    assert_eq!(r.config, presets::table2_sim());
    let c = &r.config;
    assert_eq!(c.modules_per_arm, 40);
    assert_eq!(c.dc_voltage, 24e3);
    assert_eq!(c.upper_arm_modules[0].capacitance, 15e-3);
    assert_eq!(c.arm_inductance, 10e-3);
    assert_eq!(c.clamp_params(0).inductance, 10e-6);
    assert_eq!(c.switching_freq, 5e3);
    assert_eq!(c.fundamental_freq, 50.0);
    assert_eq!(c.modulation_index, 0.95);
    assert_eq!(r.plan.delay, lapsc::core::DelayModel::ZeroOrderHold);
}

#[test]
fn table3_leaky_matches_resistor_table() {
    let r = load_scenario("table3-leaky").unwrap().resolve().unwrap();
    let mut expect = presets::table3_leaky();
    expect.total_displacement = 0.02;
    expect.numerics.duration = 12.0;
    assert_eq!(r.config, expect);
    let leaks = |arm: &[lapsc::core::ModuleParams]| -> Vec<(usize, f64)> {
        arm.iter()
            .enumerate()
            .filter_map(|(i, m)| m.leak_resistance.map(|r| (i + 1, r)))
            .collect()
    };
    assert_eq!(
        leaks(&r.config.upper_arm_modules),
        vec![(4, 32e3), (9, 28e3), (14, 24e3), (19, 20e3)]
    );
    assert_eq!(
        leaks(&r.config.lower_arm_modules),
        vec![(4, 16e3), (9, 12e3), (14, 8e3), (19, 4e3)]
    );
    assert_eq!(r.plan.schedule.changes(), &[(7.0, 0.02)]);
}

#[test]
fn mismatch_step_matches_spread() {
    let r = load_scenario("mismatch-step").unwrap().resolve().unwrap();
    let mut expect = presets::mismatch();
    expect.total_displacement = 0.02;
    assert_eq!(r.config, expect);
    assert_eq!(r.plan.schedule.initial(), 0.0);
    assert_eq!(r.plan.schedule.changes(), &[(5.0, 0.02)]);
    assert_eq!(r.outputs.convergence_after, Some(5.0));
    assert_eq!(r.design.tolerance, 0.3);
}

#[test]
fn shipped_scenarios_round_trip() {
    for (name, text) in SHIPPED {
        let parsed = parse_scenario(text).unwrap();
        let emitted = emit_scenario(&parsed);
        let a: toml::Value = toml::from_str(text).unwrap();
        let b: toml::Value = toml::from_str(&emitted).unwrap();
        assert_eq!(a, b, "{name}");
        assert_eq!(parse_scenario(&emitted).unwrap(), parsed, "{name}");
    }
}

#[test]
fn shipped_files_on_disk_match_embedded() {
    for (name, text) in SHIPPED {
        let path = format!("{}/presets/{name}.toml", env!("CARGO_MANIFEST_DIR"));
        assert_eq!(std::fs::read_to_string(path).unwrap(), text);
    }
    assert!(shipped("no-such").is_none());
}

#[test]
fn unknown_keys_are_rejected() {
    let text = "name = \"x\"\npreset = \"table2-sim\"\n[config]\nmodules_per_am = 40\n";
    let err = parse_scenario(text).unwrap_err();
    assert!(matches!(err, ScenarioError::Parse(_)));
    assert!(err.to_string().contains("modules_per_am"), "{err}");
    assert!(err.to_string().contains("line 4"), "{err}");
    for bad in [
        "name = \"x\"\npreset = \"table2-sim\"\ncolor = 1\n",
        "name = \"x\"\npreset = \"table2-sim\"\n[config.clamp]\ninductanse = 1e-5\n",
        "name = \"x\"\npreset = \"table2-sim\"\n[displacement]\nsteps = [{ at = 1.0, valu = 0.1 }]\n",
        "name = \"x\"\npreset = \"table9\"\n",
    ] {
        assert!(parse_scenario(bad).is_err(), "{bad}");
    }
}

#[test]
fn identical_runs_write_identical_files() {
    let mut s = short("mismatch-step", 0.06);
    s.set_constant_displacement(0.02);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let files: Vec<Vec<Vec<u8>>> = dirs
        .iter()
        .map(|d| {
            let out = run::run(&s).unwrap();
            run::write_outputs(&out, d.path())
                .unwrap()
                .iter()
                .map(|p| std::fs::read(p).unwrap())
                .collect()
        })
        .collect();
    assert_eq!(files[0].len(), 3);
    assert_eq!(files[0], files[1]);
}

#[test]
fn trace_file_layout() {
    let mut s = short("table2-sim", 0.02);
    s.outputs.get_or_insert_with(Default::default).clamp_currents = Some(true);
    let out = run::run(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run::write_outputs(&out, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("table2-sim.trace.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 80 + 4 + 78);
    assert_eq!(header[0], "time");
    assert_eq!(header[40], "u_c_u_40");
    assert_eq!(header[41], "u_c_l_1");
    assert_eq!(&header[81..85], &["i_arm_u", "i_arm_l", "v_out", "i_out"]);
    assert_eq!(header[85], "i_clamp_u_1");
    let mut last = f64::NEG_INFINITY;
    let mut rows = 0;
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), header.len());
        let t: f64 = cols[0].parse().unwrap();
        assert!(t > last);
        last = t;
        rows += 1;
    }
    assert_eq!(rows, 100);
}

#[test]
fn report_echoes_defaults() {
    let out = run::run(&short("table2-sim", 0.12)).unwrap();
    let report: toml::Value = toml::from_str(&lapsc::report::to_toml(&out.report())).unwrap();
    let d = &report["defaults"];
    assert_eq!(d["thd_bandwidth"].as_float(), Some(500e3));
    assert_eq!(d["band"].as_float(), Some(0.03));
    assert_eq!(d["switch_on_drop"].as_float(), Some(0.05));
    assert_eq!(d["diode_drop"].as_float(), Some(0.05));
    assert_eq!(report["scenario"]["delay_model"].as_str(), Some("zero_order_hold"));
    assert_eq!(report["solver"]["complementarity_violations"].as_integer(), Some(0));
    let rel = report["energy"]["residual_relative"].as_float().unwrap();
    assert!(rel.abs() < 1e-3, "{rel}");
    assert!(report["metrics"]["thd"].as_float().unwrap() > 0.0);
    assert!(report["loss"]["simulated"]["throughput"].as_float().unwrap() > 5e5);
    assert_eq!(report["loss"]["analytic"]["rms_arm_current"].as_float().map(|x| (x * 100.0).round()), Some(4259.0));
}

#[test]
fn sweep_records_failures_and_sorts() {
    let s = short("table2-sim", 0.12);
    let doc = run::sweep(&s, Axis::DeltaA, &[0.02, -1.0, 0.0]);
    let values: Vec<f64> = doc.rows.iter().map(|r| r.value).collect();
    assert_eq!(values, vec![-1.0, 0.0, 0.02]);
    assert!(!doc.rows[0].ok);
    assert!(doc.rows[0].error.as_deref().unwrap().contains("total_displacement"));
    assert!(doc.rows[1].ok && doc.rows[2].ok);
    assert_eq!(doc.rows[1].balancing_loss, Some(0.0));
    assert!(doc.rows[2].balancing_loss.unwrap().is_finite());
    assert!(run::sweep(&s, Axis::Fsw, &[]).rows.is_empty());
}

#[test]
fn other_axes_change_the_run() {
    let s = short("table2-sim", 0.06);
    let ip = Axis::Ip.apply(&s, 50.0).resolve().unwrap();
    assert_eq!(
        ip.config.load,
        lapsc::core::LoadSpec::CurrentSource { amplitude: 50.0, load_angle: 0.0 }
    );
    let tol = Axis::Tolerance.apply(&s, 0.1).resolve().unwrap();
    assert!((tol.config.upper_arm_modules[39].capacitance - 16.5e-3).abs() < 1e-12);
    assert_eq!(tol.design.tolerance, 0.1);
    assert_eq!(Axis::Fsw.apply(&s, 4e3).resolve().unwrap().config.switching_freq, 4e3);
    assert_eq!(Axis::ClampL.apply(&s, 20e-6).resolve().unwrap().config.clamp_params(5).inductance, 20e-6);
}

/// Total simulated loss rises with the displacement.
#[test]
fn loss_grows_with_displacement() {
    let s = short("table2-sim", 1.0);
    let doc = run::sweep(&s, Axis::DeltaA, &[0.0, 0.002, 0.01, 0.02]);
    let losses: Vec<f64> = doc.rows.iter().map(|r| r.total_loss.unwrap()).collect();
    for w in losses.windows(2) {
        assert!(w[1] >= w[0], "{losses:?}");
    }
}

fn lapsc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lapsc"))
}

#[test]
fn binary_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = lapsc()
        .args(["simulate", "table2-sim", "--delta-a", "0.002", "--duration", "0.04", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("table2-sim.report.toml")).unwrap();
    assert!(report.contains("displacement_initial = 0.002"));
    assert!(report.contains("duration = 0.04"));

    let out = lapsc().args(["design", "mismatch-step"]).output().unwrap();
    assert!(out.status.success());
    let v: toml::Value = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let floor = v["design"]["min_displacement"].as_float().unwrap();
    assert!((floor - 4.615e-3).abs() < 1e-6, "{floor}");

    let out = lapsc().args(["loss", "table2-sim"]).output().unwrap();
    assert!(out.status.success());
    let v: toml::Value = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(v["analytic"]["avg_arm_current"].as_float(), Some(23.75));

    let out = lapsc()
        .args(["sweep", "table2-sim", "--axis", "delta_a", "--values", ""])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("rows = []"));

    let out = lapsc()
        .args(["sweep", "table2-sim", "--axis", "dc_voltage", "--values", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn binary_reports_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("typo.toml");
    std::fs::write(&bad, "name = \"x\"\npreset = \"table2-sim\"\n[config]\nmodules_per_am = 40\n").unwrap();
    let out = lapsc().arg("design").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("modules_per_am"));

    let out = lapsc().args(["simulate", "/no/such/file.toml"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}
