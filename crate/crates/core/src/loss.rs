//! Arm loss estimates from the arm current waveform, the extra loss caused
//! by the displacement, and the same figures extracted from simulation.
//!
//! The analytic side assumes switches and diodes share one forward drop
//! `V_0` and one on-resistance `r`. The arm current is
//! `i_arm = (I_p / 2) (1/k + sin(ωt - φ))` and the upper-arm insertion duty is
//! `(1 - m_a sin ωt) / 2`, which is what the simulator and modulator use.
//!
//! Capacitor RMS current: the printed closed form does not agree with a
//! brute-force integration of `i_arm² · duty` over a period (it differs by
//! about 30 % at `m_a = 0.95`, `φ = 0`). [`arm_current_stats`] returns the
//! integrated form
//! `I_rms,cap = (I_p / 4) √(2/k² + 1 - 2 m_a cos φ / k)`, which the tests
//! check against an explicit carrier comparison.
//!
//! Balancing loss: the printed sum of the linear term over all modules is
//! identically zero. The drop dissipates for either current direction, so
//! each module contributes with the magnitude `|N - 2j + 1|`.

use alloc::vec::Vec;

// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::design::{self, DesignError};
use crate::model::ConverterConfig;
use crate::sim::{EnergyTally, SimTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("need at least {needed} complete fundamental cycles, trace has {available}")]
    InsufficientWindow { needed: usize, available: usize },
    #[error("paired runs differ in {0}")]
    Unpaired(&'static str),
}

/// RMS and mean of the arm current and RMS of one module capacitor current.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmCurrentStats {
    pub rms_arm: f64,
    pub avg_arm: f64,
    pub rms_cap: f64,
}

pub fn arm_current_stats(i_p: f64, m_a: f64, phi: f64) -> Result<ArmCurrentStats, DesignError> {
    let k = design::k_factor(m_a, phi)?;
    let rms_arm = i_p / 2.0 * (1.0 / (k * k) + 0.5).sqrt();
    let avg_arm = i_p / (2.0 * k);
    let radicand = 2.0 / (k * k) + 1.0 - 2.0 * m_a * phi.cos() / k;
    let rms_cap = i_p / 4.0 * radicand.max(0.0).sqrt();
    Ok(ArmCurrentStats {
        rms_arm,
        avg_arm,
        rms_cap,
    })
}

/// The capacitor RMS current as printed, kept for comparison in reports.
pub fn rms_cap_printed(i_p: f64, m_a: f64, phi: f64) -> Result<f64, DesignError> {
    let k = design::k_factor(m_a, phi)?;
    let c = phi.cos();
    let a = (m_a * m_a + 2.0 - 4.0 * k * m_a * c) / (2.0 * k * k);
    let b = (4.0 * m_a * m_a + 4.0 - m_a * m_a * c) / 8.0;
    Ok(i_p / 4.0 * (a + b).max(0.0).sqrt())
}

/// One arm's loss split into its terms, in watts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmLoss {
    pub drop: f64,
    pub resistive: f64,
    pub capacitor: f64,
    pub switching: f64,
}

impl ArmLoss {
    pub fn conduction(&self) -> f64 {
        self.drop + self.resistive + self.capacitor
    }

    pub fn total(&self) -> f64 {
        self.conduction() + self.switching
    }
}

/// `N I_avg V_0 + N r I_rms,arm² + N r_c I_rms,cap² + 2 N f_sw · ½ V_m I_avg (t_on + t_off)`.
///
/// The current at the switching instants is taken as the mean arm current;
/// `r_c` is the mean ESR of the upper arm and the switching times come from
/// the configuration.
pub fn arm_loss(cfg: &ConverterConfig, stats: &ArmCurrentStats, v0: f64, r: f64) -> ArmLoss {
    let n = cfg.modules_per_arm as f64;
    let mods = &cfg.upper_arm_modules;
    let r_c = mods.iter().map(|m| m.esr).sum::<f64>() / mods.len() as f64;
    let times = cfg.switch.turn_on_time + cfg.switch.turn_off_time;
    ArmLoss {
        drop: n * stats.avg_arm * v0,
        resistive: n * r * stats.rms_arm * stats.rms_arm,
        capacitor: n * r_c * stats.rms_cap * stats.rms_cap,
        switching: 2.0
            * n
            * cfg.switching_freq
            * 0.5
            * cfg.nominal_module_voltage()
            * stats.avg_arm
            * times,
    }
}

/// Extra loss in one arm caused by the displacement, in watts, and the
/// contribution of each module `j = 1..N`.
pub fn balancing_loss(
    n: usize,
    rms_arm: f64,
    delta_a: f64,
    v0: f64,
    r: f64,
    r_l: f64,
) -> (f64, Vec<f64>) {
    assert!(n >= 2, "at least two modules required");
    let unit = rms_arm * delta_a / (n - 1) as f64;
    let terms: Vec<f64> = (1..=n)
        .map(|j| {
            let w = (n as f64 - 2.0 * j as f64 + 1.0).abs();
            unit * unit * w * w * (r_l + 2.0 * r) + unit * w * v0
        })
        .collect();
    (terms.iter().sum(), terms)
}

/// Loss figures for one arm in watts, plus leg-level throughput.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub rms_cap_current: f64,
    pub rms_arm_current: f64,
    pub avg_arm_current: f64,
    /// Drops, on-resistances and capacitor ESR.
    pub conduction_loss: f64,
    pub switching_loss: f64,
    /// Conduction plus switching.
    pub total_arm_loss: f64,
    pub balancing_loss: f64,
    pub per_pair_balancing: Vec<f64>,
    /// Clamp diodes, clamp inductors and arm resistance; zero in the
    /// analytic report.
    pub clamp_and_arm_loss: f64,
    /// Self-discharge resistors; zero in the analytic report.
    pub leak_loss: f64,
    /// Mean power delivered to the load by the whole leg.
    pub throughput: f64,
    pub notes: Vec<&'static str>,
}

pub const NOTE_CAP_RMS: &str =
    "capacitor rms current uses the form validated by numeric integration, not the printed radicand";
pub const NOTE_ABS_WEIGHT: &str =
    "balancing loss sums |N - 2j + 1| per module; the printed linear sum is identically zero";
pub const NOTE_SWITCHING_CURRENT: &str =
    "switching term uses the mean arm current as the current at the switching instants";
pub const NOTE_DEVICE_DROPS: &str =
    "V_0 and r are taken from the main switch; the clamp loop uses the first clamp's inductor resistance";
pub const NOTE_PAIRED: &str =
    "balancing loss is the per-arm difference in total dissipation against a paired run";

/// Analytic report for `cfg` at displacement `delta_a`, with
/// `V_0 = on_drop` and `r = on_resistance` of the main switch.
pub fn analytic_loss(cfg: &ConverterConfig, delta_a: f64) -> Result<LossReport, LossError> {
    let (i_p, phi) = cfg.load_current();
    let stats = arm_current_stats(i_p, cfg.modulation_index, phi)?;
    let v0 = cfg.switch.on_drop;
    let r = cfg.switch.on_resistance;
    let r_l = cfg.clamp_params(0).inductor_resistance;
    let arm = arm_loss(cfg, &stats, v0, r);
    let (bal, pairs) = balancing_loss(cfg.modules_per_arm, stats.rms_arm, delta_a, v0, r, r_l);
    let v_peak = cfg.modulation_index * cfg.dc_voltage / 2.0;
    Ok(LossReport {
        rms_cap_current: stats.rms_cap,
        rms_arm_current: stats.rms_arm,
        avg_arm_current: stats.avg_arm,
        conduction_loss: arm.conduction(),
        switching_loss: arm.switching,
        total_arm_loss: arm.total(),
        balancing_loss: bal,
        per_pair_balancing: pairs,
        clamp_and_arm_loss: 0.0,
        leak_loss: 0.0,
        throughput: 0.5 * v_peak * i_p * phi.cos(),
        notes: alloc::vec![
            NOTE_CAP_RMS,
            NOTE_ABS_WEIGHT,
            NOTE_SWITCHING_CURRENT,
            NOTE_DEVICE_DROPS
        ],
    })
}

/// Energy flows over the last `cycles` complete fundamental cycles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyWindow {
    pub duration: f64,
    pub energy: EnergyTally,
}

impl SteadyWindow {
    pub fn of(trace: &SimTrace, cycles: usize) -> Result<Self, LossError> {
        let cm = &trace.cycle_means;
        let needed = cycles.max(2);
        if cm.len() < needed + 1 {
            return Err(LossError::InsufficientWindow {
                needed: needed + 1,
                available: cm.len(),
            });
        }
        let first = &cm[cm.len() - needed - 1];
        let last = &cm[cm.len() - 1];
        Ok(Self {
            duration: last.t_end - first.t_end,
            energy: last.energy.since(&first.energy),
        })
    }

    /// Mean dissipated power of the whole leg, leaks excluded.
    pub fn device_loss(&self) -> f64 {
        (self.energy.dissipated() - self.energy.leak) / self.duration
    }
}

/// Per-arm losses averaged over the last `cycles` fundamental cycles of a
/// trace. The balancing loss is left at zero; see [`simulated_loss_paired`].
pub fn simulated_loss(trace: &SimTrace, cycles: usize) -> Result<LossReport, LossError> {
    let w = SteadyWindow::of(trace, cycles)?;
    let cm = &trace.cycle_means;
    let tail = &cm[cm.len() - cycles.max(2)..];
    let m = tail.len() as f64;
    let avg = |f: &dyn Fn(&crate::sim::CycleMean) -> f64| tail.iter().map(f).sum::<f64>() / m;
    let rms_arm = avg(&|c| c.arm_current_upper_sq_mean).sqrt();
    let avg_arm = avg(&|c| c.arm_current_upper_mean);
    let rms_cap = avg(&|c| {
        c.cap_current_upper_sq_mean.iter().sum::<f64>() / c.cap_current_upper_sq_mean.len() as f64
    })
    .sqrt();
    let e = &w.energy;
    // The tallies cover both arms of the leg.
    let per_arm = |x: f64| x / (2.0 * w.duration);
    let conduction = per_arm(e.switch_conduction + e.capacitor_esr);
    let switching = per_arm(e.switching);
    Ok(LossReport {
        rms_cap_current: rms_cap,
        rms_arm_current: rms_arm,
        avg_arm_current: avg_arm,
        conduction_loss: conduction,
        switching_loss: switching,
        total_arm_loss: conduction + switching,
        balancing_loss: 0.0,
        per_pair_balancing: Vec::new(),
        clamp_and_arm_loss: per_arm(e.diode + e.clamp_inductor + e.arm_resistance),
        leak_loss: per_arm(e.leak),
        throughput: e.load / w.duration,
        notes: alloc::vec![NOTE_PAIRED],
    })
}

/// [`simulated_loss`] of `trace` with the balancing loss set to the per-arm
/// increase in device dissipation over `baseline`, a run of the same
/// converter without displacement.
pub fn simulated_loss_paired(
    trace: &SimTrace,
    baseline: &SimTrace,
    cycles: usize,
) -> Result<LossReport, LossError> {
    if trace.modules_per_arm != baseline.modules_per_arm {
        return Err(LossError::Unpaired("module count"));
    }
    if trace.dt != baseline.dt {
        return Err(LossError::Unpaired("time step"));
    }
    let mut report = simulated_loss(trace, cycles)?;
    let a = SteadyWindow::of(trace, cycles)?;
    let b = SteadyWindow::of(baseline, cycles)?;
    report.balancing_loss = (a.device_loss() - b.device_loss()) / 2.0;
    Ok(report)
}
