//! Analytic design rules: displacement floor, clamp inductor window and
//! imbalance drift estimates, all from the configuration alone.
//!
//! Conventions used throughout:
//!
//! * `k = 2 / (m_a cos φ)` relates the phase-current amplitude `I_p` to the
//!   dc component of the arm current, `I_dc = I_p / (2k)`.
//! * `ε` is the per-step capacitance spread; the first and last module of an
//!   arm sit at `(1 ∓ (N-1) ε / 2) C`.
//! * The imbalance current is approximated by `ε I_dc`.

use alloc::vec::Vec;

// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::clamp::{self, ClampTransientParams};
use crate::model::ConverterConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("zero real power, no dc arm component (cos φ = 0)")]
    ZeroRealPower,
    #[error("non-physical capacitance spread: (N-1) ε / 2 = {0} must stay below 1")]
    NonPhysicalSpread(f64),
    #[error("diode current rating must be positive, got {0}")]
    NonPositiveDiodeRating(f64),
    #[error("infeasible clamp inductor window: lower bound {lower:e} H exceeds upper bound {upper:e} H")]
    InfeasibleWindow { lower: f64, upper: f64 },
    #[error(transparent)]
    Clamp(#[from] clamp::ClampError),
}

/// `ε = 2 · tolerance / (N - 1)`; ±15 % over 40 modules gives `0.3 / 39`.
pub fn epsilon_from_tolerance(n: usize, tolerance: f64) -> f64 {
    assert!(n >= 2, "at least two modules required");
    2.0 * tolerance / (n - 1) as f64
}

/// `k = 2 / (m_a cos φ)`.
pub fn k_factor(modulation_index: f64, phi: f64) -> Result<f64, DesignError> {
    let c = phi.cos();
    if c.abs() < 1e-12 || modulation_index == 0.0 {
        return Err(DesignError::ZeroRealPower);
    }
    Ok(2.0 / (modulation_index * c))
}

/// Mean module capacitance of the upper arm, used as the rated `C`.
pub fn rated_capacitance(cfg: &ConverterConfig) -> f64 {
    let m = &cfg.upper_arm_modules;
    m.iter().map(|m| m.capacitance).sum::<f64>() / m.len() as f64
}

fn spread_product(n: usize, epsilon: f64) -> Result<f64, DesignError> {
    let x = (n - 1) as f64 * epsilon / 2.0;
    if !(x.abs() < 1.0) {
        return Err(DesignError::NonPhysicalSpread(x));
    }
    Ok((1.0 - x) * (1.0 + x))
}

/// Voltage difference between the first and last module accumulated over
/// one fundamental cycle by capacitance mismatch.
pub fn drift_per_cycle(cfg: &ConverterConfig, epsilon: f64) -> Result<f64, DesignError> {
    let n = cfg.modules_per_arm;
    let (ip, phi) = cfg.load_current();
    let k = k_factor(cfg.modulation_index, phi)?;
    let denom = spread_product(n, epsilon)?;
    let c = rated_capacitance(cfg);
    Ok(ip / (4.0 * k * cfg.fundamental_freq * c) * (n - 1) as f64 * epsilon * epsilon / denom)
}

/// Voltage difference between the first and last module removed per
/// fundamental cycle by a total displacement `delta_a`.
pub fn compensation_per_cycle(
    cfg: &ConverterConfig,
    epsilon: f64,
    delta_a: f64,
) -> Result<f64, DesignError> {
    let (ip, phi) = cfg.load_current();
    let k = k_factor(cfg.modulation_index, phi)?;
    let denom = spread_product(cfg.modules_per_arm, epsilon)?;
    let c = rated_capacitance(cfg);
    Ok(ip * delta_a / (4.0 * k * cfg.fundamental_freq * c) * (2.0 / denom))
}

/// Smallest total displacement that outpaces the mismatch drift:
/// `(N - 1) ε² / 2`. Discretization delay calls for some headroom on top.
pub fn min_displacement(n: usize, epsilon: f64) -> f64 {
    (n - 1) as f64 * epsilon * epsilon / 2.0
}

/// Average balancing current `I_dc · Δ_a = I_p Δ_a / (2k)`.
pub fn avg_balancing_current(
    i_p: f64,
    phi: f64,
    modulation_index: f64,
    delta_a: f64,
) -> Result<f64, DesignError> {
    let k = k_factor(modulation_index, phi)?;
    Ok(i_p * delta_a / (2.0 * k))
}

/// Average on-time of the lower switch that enables a clamp, `0.5 / f_sw`.
pub fn avg_on_time(switching_freq: f64) -> f64 {
    0.5 / switching_freq
}

/// Clamp loop of two rated modules as seen by the closed-form analysis.
pub fn rated_clamp_loop(cfg: &ConverterConfig, u_diff: f64) -> ClampTransientParams {
    let c = rated_capacitance(cfg);
    let esr = cfg.upper_arm_modules.iter().map(|m| m.esr).sum::<f64>()
        / cfg.upper_arm_modules.len() as f64;
    let cp = cfg.clamp_params(0);
    ClampTransientParams {
        effective_capacitance: c / 2.0,
        loop_resistance: 2.0 * esr
            + cp.diode_resistance
            + cfg.switch.on_resistance
            + cp.inductor_resistance,
        inductance: cp.inductance,
        initial_diff: u_diff,
    }
}

/// Clamp inductor window `(lower, upper)` in henries.
///
/// The lower bound keeps the clamp current below `i_d_max`: the smaller of
/// the free half-sine bound `C_e [(U/I)^2 + R^2/4]` and the linear-ramp bound
/// `U T_sw / I`. The upper bound makes the average clamp current over the
/// mean on-time `T = 0.5 / f_sw` cover the displacement current:
/// `U T / L >= I_p Δ_a / (2k)`. `Δ_a = 0` leaves the upper bound infinite.
pub fn inductor_window(
    cfg: &ConverterConfig,
    u_diff_max: f64,
    i_d_max: f64,
    i_p: f64,
    phi: f64,
    delta_a: f64,
) -> Result<(f64, f64), DesignError> {
    if !(i_d_max > 0.0) {
        return Err(DesignError::NonPositiveDiodeRating(i_d_max));
    }
    let lp = rated_clamp_loop(cfg, u_diff_max);
    let r = lp.loop_resistance;
    let ratio = u_diff_max / i_d_max;
    let t_sw = cfg.switching_period();
    let lower = (lp.effective_capacitance * (ratio * ratio + r * r / 4.0)).min(ratio * t_sw);
    let k = k_factor(cfg.modulation_index, phi)?;
    let demand = i_p * delta_a;
    let upper = if demand > 0.0 {
        2.0 * k * u_diff_max * avg_on_time(cfg.switching_freq) / demand
    } else {
        f64::INFINITY
    };
    if lower > upper {
        return Err(DesignError::InfeasibleWindow { lower, upper });
    }
    Ok((lower, upper))
}

/// Designer inputs. `None` falls back to the configuration's clamp ratings
/// when they are positive, otherwise to 1 % of `V_m` for the voltage and
/// ten times the average balancing current for the diode rating.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignInputs {
    /// Capacitance tolerance as a fraction (±15 % is `0.15`).
    pub tolerance: f64,
    pub u_diff_max: Option<f64>,
    pub i_d_max: Option<f64>,
    /// Displacement to size for; `None` uses the configuration value.
    pub delta_a: Option<f64>,
}

impl Default for DesignInputs {
    fn default() -> Self {
        Self {
            tolerance: 0.15,
            u_diff_max: None,
            i_d_max: None,
            delta_a: None,
        }
    }
}

/// Everything the design rules derive from one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignReport {
    pub epsilon: f64,
    pub k_factor: f64,
    pub dc_arm_current: f64,
    pub imbalance_current: f64,
    pub drift_per_cycle: f64,
    pub compensation_per_cycle: f64,
    pub min_displacement: f64,
    pub inductor_lower: f64,
    pub inductor_upper: f64,
    /// `false` when the window is empty; both bounds are still reported.
    pub inductor_feasible: bool,
    pub avg_on_time: f64,
    pub avg_balancing_current: f64,
    pub peak_diode_current: f64,
    // echoed inputs
    pub tolerance: f64,
    pub u_diff_max: f64,
    pub i_d_max: f64,
    pub i_p: f64,
    pub phi: f64,
    pub delta_a: f64,
    pub notes: Vec<&'static str>,
}

pub const NOTE_UPPER_BOUND: &str =
    "inductor_upper is the direct inversion of U_diff,max*T/L >= I_p*delta_a/(2k); \
     the printed closed form of that bound is not dimensionally consistent and is not used";
pub const NOTE_LOWER_BOUND: &str =
    "inductor_lower inverts the free peak bound, L >= C_e*((U/I)^2 + R^2/4), \
     and takes the smaller of that and U*T_sw/I";
pub const NOTE_DRIFT: &str =
    "drift_per_cycle substitutes I_imbalance = eps*I_dc, so it scales with eps^2";

pub fn design_report(
    cfg: &ConverterConfig,
    inputs: &DesignInputs,
) -> Result<DesignReport, DesignError> {
    let n = cfg.modules_per_arm;
    let (i_p, phi) = cfg.load_current();
    let k = k_factor(cfg.modulation_index, phi)?;
    let eps = epsilon_from_tolerance(n, inputs.tolerance);
    let delta_a = inputs.delta_a.unwrap_or(cfg.total_displacement);
    let i_dc = i_p / (2.0 * k);
    let i_bal = avg_balancing_current(i_p, phi, cfg.modulation_index, delta_a)?;
    let cp = cfg.clamp_params(0);
    let u_diff_max = inputs.u_diff_max.unwrap_or(if cp.max_diff_voltage > 0.0 {
        cp.max_diff_voltage
    } else {
        0.01 * cfg.nominal_module_voltage()
    });
    let i_d_max = inputs.i_d_max.unwrap_or(if cp.diode_current_rating > 0.0 {
        cp.diode_current_rating
    } else {
        10.0 * i_bal
    });
    let (lower, upper, feasible) =
        match inductor_window(cfg, u_diff_max, i_d_max, i_p, phi, delta_a) {
            Ok((l, u)) => (l, u, true),
            Err(DesignError::InfeasibleWindow { lower, upper }) => (lower, upper, false),
            Err(e) => return Err(e),
        };
    let lp = rated_clamp_loop(cfg, u_diff_max);
    let peak = clamp::peak_current_truncated(u_diff_max, &lp, 1.0, cfg.switching_period())?;
    Ok(DesignReport {
        epsilon: eps,
        k_factor: k,
        dc_arm_current: i_dc,
        imbalance_current: eps * i_dc,
        drift_per_cycle: drift_per_cycle(cfg, eps)?,
        compensation_per_cycle: compensation_per_cycle(cfg, eps, delta_a)?,
        min_displacement: min_displacement(n, eps),
        inductor_lower: lower,
        inductor_upper: upper,
        inductor_feasible: feasible,
        avg_on_time: avg_on_time(cfg.switching_freq),
        avg_balancing_current: i_bal,
        peak_diode_current: peak,
        tolerance: inputs.tolerance,
        u_diff_max,
        i_d_max,
        i_p,
        phi,
        delta_a,
        notes: alloc::vec![NOTE_DRIFT, NOTE_LOWER_BOUND, NOTE_UPPER_BOUND],
    })
}

/// Assumption set that reproduces the 3 µH – 10 µH clamp inductor range of
/// the eight-module laboratory setup: `(U_diff,max, I_D,max, I_p, φ, Δ_a)`.
pub const EXPERIMENT_WINDOW_ASSUMPTIONS: (f64, f64, f64, f64, f64) = (0.03, 0.9, 30.0, 0.0, 0.02);
