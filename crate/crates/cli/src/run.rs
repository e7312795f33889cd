//! Simulation runs, loss studies and parameter sweeps.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use lapsc_core::design::{design_report, DesignError};
use lapsc_core::loss::{analytic_loss, simulated_loss, LossError, LossReport, SteadyWindow};
use lapsc_core::metrics::{default_thd_bandwidth, spread_metrics, trace_thd, MetricsReport, SpreadOptions};
use lapsc_core::sim::{simulate, SimError};
use lapsc_core::SimTrace;
use thiserror::Error;

use crate::report::*;
use crate::scenario::{Resolved, Scenario, ScenarioError};
use crate::trace::{write_cycles, write_trace};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("design rules failed: {0}")]
    Design(#[from] DesignError),
    #[error("loss model failed: {0}")]
    Loss(#[from] LossError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

/// Everything one simulated scenario produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub resolved: Resolved,
    pub trace: SimTrace,
    pub metrics: MetricsReport,
    pub steady_cycles: usize,
    /// `None` when the run is too short for a steady window.
    pub simulated_loss: Option<LossReport>,
    pub analytic_loss: LossReport,
}

impl RunOutput {
    pub fn report(&self) -> RunReport {
        let r = &self.resolved;
        RunReport {
            scenario: ScenarioEcho::new(&self.scenario, r),
            defaults: Defaults::new(&r.config, self.metrics.thd_bandwidth, r, self.steady_cycles),
            solver: SolverStats::new(&self.trace),
            energy: EnergySection::new(&self.trace),
            metrics: (&self.metrics).into(),
            loss: LossPair {
                analytic: (&self.analytic_loss).into(),
                simulated: self.simulated_loss.as_ref().map(Into::into),
            },
        }
    }

    /// Steady-window energy flows; `None` for short runs.
    pub fn steady_window(&self) -> Option<SteadyWindow> {
        SteadyWindow::of(&self.trace, self.steady_cycles).ok()
    }
}

/// Cycles averaged for the steady-state loss figures.
pub fn steady_cycles(r: &Resolved, trace: &SimTrace) -> usize {
    r.outputs
        .steady_cycles
        .unwrap_or(trace.cycle_means.len() / 2)
        .max(2)
}

pub fn thd_bandwidth(r: &Resolved) -> f64 {
    r.outputs
        .thd_bandwidth
        .unwrap_or_else(|| default_thd_bandwidth(r.config.switching_freq, r.config.modules_per_arm))
}

pub fn run(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let resolved = scenario.resolve()?;
    let cfg = &resolved.config;
    let trace = simulate(cfg, &resolved.plan)?;
    let o = &resolved.outputs;
    let opts = SpreadOptions {
        band: o.band.unwrap_or(lapsc_core::metrics::DEFAULT_BAND),
        consecutive: o.consecutive.unwrap_or(lapsc_core::metrics::DEFAULT_CONSECUTIVE),
        after: o.convergence_after.unwrap_or(0.0),
    };
    let mut metrics = spread_metrics(&trace, cfg.nominal_module_voltage(), &opts);
    metrics.thd_bandwidth = thd_bandwidth(&resolved);
    metrics.thd = trace_thd(&trace, metrics.thd_bandwidth).ok();
    let steady = steady_cycles(&resolved, &trace);
    let simulated_loss = simulated_loss(&trace, steady).ok();
    let analytic_loss = analytic_loss(cfg, scenario.final_displacement(cfg))?;
    Ok(RunOutput {
        scenario: scenario.clone(),
        resolved,
        trace,
        metrics,
        steady_cycles: steady,
        simulated_loss,
        analytic_loss,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Writes `<name>.report.toml`, `<name>.cycles.csv` and, unless disabled,
/// `<name>.trace.csv` into `dir`. Returns the written paths.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    ensure_dir(dir)?;
    let name = &out.scenario.name;
    let mut written = Vec::new();
    let report = dir.join(format!("{name}.report.toml"));
    write_text(&report, &to_toml(&out.report()))?;
    written.push(report);
    let cycles = dir.join(format!("{name}.cycles.csv"));
    write_cycles(&out.trace, create(&cycles)?).map_err(|source| RunError::Csv {
        path: cycles.display().to_string(),
        source,
    })?;
    written.push(cycles);
    if out.resolved.outputs.trace.unwrap_or(true) {
        let trace = dir.join(format!("{name}.trace.csv"));
        write_trace(&out.trace, create(&trace)?).map_err(|source| RunError::Csv {
            path: trace.display().to_string(),
            source,
        })?;
        written.push(trace);
    }
    Ok(written)
}

pub fn design_document(scenario: &Scenario) -> Result<DesignDocument, RunError> {
    let r = scenario.resolve()?;
    let d = design_report(&r.config, &r.design)?;
    Ok(DesignDocument::new(&scenario.name, &r.config, &d))
}

/// Analytic losses at the scenario's final displacement. With `simulate`,
/// the scenario and its zero-displacement twin are run and the simulated
/// balancing loss is their per-arm difference in device dissipation.
pub fn loss_document(scenario: &Scenario, simulate: bool) -> Result<LossDocument, RunError> {
    let r = scenario.resolve()?;
    let cfg = &r.config;
    let delta_a = scenario.final_displacement(cfg);
    let analytic = analytic_loss(cfg, delta_a)?;
    let mut steady = 0;
    let simulated = if simulate {
        let a = run(scenario)?;
        let b = run(&scenario.without_displacement())?;
        steady = a.steady_cycles;
        let mut l = a.simulated_loss.clone().ok_or(LossError::InsufficientWindow {
            needed: steady + 1,
            available: a.trace.cycle_means.len(),
        })?;
        l.balancing_loss = paired_balancing(&a, &b)?;
        Some((&l).into())
    } else {
        None
    };
    Ok(LossDocument {
        scenario: scenario.name.clone(),
        delta_a,
        defaults: LossDefaults {
            v0: cfg.switch.on_drop,
            r: cfg.switch.on_resistance,
            clamp_inductor_resistance: cfg.clamp_params(0).inductor_resistance,
            steady_cycles: steady,
        },
        analytic: (&analytic).into(),
        simulated,
    })
}

/// Per-arm increase in device dissipation of `a` over `baseline`.
pub fn paired_balancing(a: &RunOutput, baseline: &RunOutput) -> Result<f64, LossError> {
    let wa = SteadyWindow::of(&a.trace, a.steady_cycles)?;
    let wb = SteadyWindow::of(&baseline.trace, a.steady_cycles)?;
    Ok((wa.device_loss() - wb.device_loss()) / 2.0)
}

/// Parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// Final value of the displacement schedule.
    DeltaA,
    /// Load current amplitude.
    Ip,
    /// Capacitance/ESR spread along each arm.
    Tolerance,
    Fsw,
    ClampL,
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delta_a" => Ok(Axis::DeltaA),
            "i_p" => Ok(Axis::Ip),
            "tolerance" => Ok(Axis::Tolerance),
            "f_sw" => Ok(Axis::Fsw),
            "clamp_l" | "clamp_L" => Ok(Axis::ClampL),
            _ => Err(format!(
                "unknown axis `{s}`; expected delta_a, i_p, tolerance, f_sw or clamp_l"
            )),
        }
    }
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::DeltaA => "delta_a",
            Axis::Ip => "i_p",
            Axis::Tolerance => "tolerance",
            Axis::Fsw => "f_sw",
            Axis::ClampL => "clamp_l",
        }
    }

    pub fn apply(self, s: &Scenario, v: f64) -> Scenario {
        let mut s = s.clone();
        match self {
            Axis::DeltaA => s.set_final_displacement(v),
            Axis::Ip => s.config_mut().load.get_or_insert_with(Default::default).amplitude = Some(v),
            Axis::Tolerance => {
                s.config_mut().mismatch_tolerance = Some(v);
                s.design.get_or_insert_with(Default::default).tolerance = Some(v);
            }
            Axis::Fsw => s.config_mut().switching_freq = Some(v),
            Axis::ClampL => s.config_mut().clamp.get_or_insert_with(Default::default).inductance = Some(v),
        }
        s
    }
}

pub fn parse_values(list: &str) -> Result<Vec<f64>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad sweep value `{s}`: {e}")))
        .collect()
}

/// Runs `jobs` on up to `workers` threads; results keep the job order.
fn parallel_map<T: Sync, R: Send>(jobs: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|sc| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = f(job);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("job ran")).collect()
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Steady-state summary kept from a run; traces are dropped as soon as
/// they are summarised.
#[derive(Clone, Debug)]
struct Summary {
    spread_final: f64,
    max_deviation_final: f64,
    convergence_time: Option<f64>,
    total_loss: Option<f64>,
    device_loss: Option<f64>,
    thd: Option<f64>,
}

fn summarise(s: &Scenario) -> Result<Summary, String> {
    let out = run(s).map_err(|e| e.to_string())?;
    Ok(Summary {
        spread_final: out.metrics.spread_final,
        max_deviation_final: out.metrics.max_deviation_final,
        convergence_time: out.metrics.convergence_time,
        total_loss: out
            .simulated_loss
            .as_ref()
            .map(|l| l.total_arm_loss + l.clamp_and_arm_loss),
        device_loss: out.steady_window().map(|w| w.device_loss()),
        thd: out.metrics.thd,
    })
}

/// One row per value, sorted by value. Failed runs are recorded and the
/// sweep carries on. Each distinct zero-displacement twin is run once.
pub fn sweep(base: &Scenario, axis: Axis, values: &[f64]) -> SweepDocument {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    let scenarios: Vec<Scenario> = values.iter().map(|&v| axis.apply(base, v)).collect();
    let mut jobs: Vec<Scenario> = scenarios.clone();
    let mut twin_index = Vec::with_capacity(scenarios.len());
    for s in &scenarios {
        let twin = s.without_displacement();
        let pos = jobs.iter().position(|j| *j == twin).unwrap_or_else(|| {
            jobs.push(twin);
            jobs.len() - 1
        });
        twin_index.push(pos);
    }
    let results = parallel_map(&jobs, workers(), summarise);
    let band = base
        .outputs
        .as_ref()
        .and_then(|o| o.band)
        .unwrap_or(lapsc_core::metrics::DEFAULT_BAND);
    let rows = values
        .iter()
        .enumerate()
        .map(|(i, &value)| match &results[i] {
            Err(e) => SweepRow {
                value,
                ok: false,
                error: Some(e.clone()),
                spread_final: None,
                max_deviation_final: None,
                converged: false,
                convergence_time: None,
                total_loss: None,
                balancing_loss: None,
                thd: None,
            },
            Ok(s) => {
                let twin = results[twin_index[i]].as_ref().ok();
                let balancing = match (s.device_loss, twin.and_then(|t| t.device_loss)) {
                    (Some(a), Some(b)) => Some((a - b) / 2.0),
                    _ => None,
                };
                SweepRow {
                    value,
                    ok: true,
                    error: None,
                    spread_final: Some(s.spread_final),
                    max_deviation_final: Some(s.max_deviation_final),
                    converged: s.convergence_time.is_some(),
                    convergence_time: s.convergence_time,
                    total_loss: s.total_loss,
                    balancing_loss: balancing,
                    thd: s.thd,
                }
            }
        })
        .collect();
    SweepDocument {
        scenario: base.name.clone(),
        axis: axis.name().into(),
        band,
        rows,
    }
}

pub fn write_sweep_csv<W: std::io::Write>(doc: &SweepDocument, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        doc.axis.as_str(),
        "ok",
        "spread_final",
        "max_deviation_final",
        "converged",
        "convergence_time",
        "total_loss",
        "balancing_loss",
        "thd",
        "error",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in &doc.rows {
        out.write_record([
            r.value.to_string(),
            r.ok.to_string(),
            opt(r.spread_final),
            opt(r.max_deviation_final),
            r.converged.to_string(),
            opt(r.convergence_time),
            opt(r.total_loss),
            opt(r.balancing_loss),
            opt(r.thd),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
