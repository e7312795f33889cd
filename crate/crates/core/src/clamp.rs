//! Closed-form analysis of one clamp path.
//!
//! While the lower switch of module `j + 1` conducts, the clamp diode and
//! inductor put capacitors `j` and `j + 1` in a series RLC loop. The diode
//! keeps the loop current non-negative, so the response is a single damped
//! half sine.
//!
//! The loop resistance is `R = 2 r_c + r_d + r_s + r_L`, where `r_s` is the
//! on-resistance of the one main switch that sits inside the loop.

use core::f64::consts::PI;

use num_complex::Complex64;
// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::model::{ClampParams, SwitchParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClampError {
    #[error("clamp loop is not underdamped: R = {resistance} >= 2 sqrt(L/C_e) = {critical}")]
    Overdamped { resistance: f64, critical: f64 },
    #[error("duty must lie in [0, 1], got {0}")]
    InvalidDuty(f64),
    #[error("inductance and effective capacitance must be positive")]
    NonPositiveReactance,
}

/// Series-RLC view of one conducting clamp.
#[derive(Clone, Debug, PartialEq)]
pub struct ClampTransientParams {
    /// `C_j C_(j+1) / (C_j + C_(j+1))`, i.e. `C/2` for equal capacitors.
    pub effective_capacitance: f64,
    pub loop_resistance: f64,
    pub inductance: f64,
    /// `u_C(j+1) - u_Cj - V_fd - V_sw` at turn-on.
    pub initial_diff: f64,
}

impl ClampTransientParams {
    /// Builds the loop from the two capacitors and the device parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn from_devices(
        c_j: f64,
        c_j1: f64,
        esr: f64,
        clamp: &ClampParams,
        switch: &SwitchParams,
        u_cj: f64,
        u_cj1: f64,
    ) -> Self {
        Self {
            effective_capacitance: c_j * c_j1 / (c_j + c_j1),
            loop_resistance: 2.0 * esr
                + clamp.diode_resistance
                + switch.on_resistance
                + clamp.inductor_resistance,
            inductance: clamp.inductance,
            initial_diff: u_cj1 - u_cj - clamp.diode_drop - switch.on_drop,
        }
    }

    /// `2 sqrt(L / C_e)`; the loop is underdamped below this resistance.
    pub fn critical_resistance(&self) -> f64 {
        2.0 * (self.inductance / self.effective_capacitance).sqrt()
    }

    pub fn is_underdamped(&self) -> bool {
        self.loop_resistance < self.critical_resistance()
    }
}

/// Damped half-sine response of a conducting clamp.
#[derive(Clone, Debug, PartialEq)]
pub struct TransientSolution {
    /// `R / 2L`.
    pub alpha: f64,
    /// `1 / sqrt(L C_e)`.
    pub omega0: f64,
    /// `sqrt(omega0^2 - alpha^2)`.
    pub omega_d: f64,
    /// `u_diff / sqrt(L/C_e - R^2/4)`, zero when the diode stays blocked.
    pub amplitude: f64,
    /// Characteristic roots `-alpha ± i omega_d`.
    pub roots: [Complex64; 2],
}

impl TransientSolution {
    /// Clamp current `t` seconds after turn-on with the switch held on.
    pub fn current(&self, t: f64) -> f64 {
        if t < 0.0 || self.omega_d * t > PI {
            return 0.0;
        }
        self.amplitude * (-self.alpha * t).exp() * (self.omega_d * t).sin()
    }

    /// Time of the current maximum, `atan(omega_d / alpha) / omega_d`.
    pub fn peak_time(&self) -> f64 {
        self.omega_d.atan2(self.alpha) / self.omega_d
    }
}

/// Voltage across clamp diode `j`: `-u_Cj` while the lower switch of module
/// `j + 1` is off, `u_C(j+1) - u_Cj` while it is on.
pub fn diode_voltage(u_cj: f64, u_cj1: f64, lower_switch_on: bool) -> f64 {
    if lower_switch_on {
        u_cj1 - u_cj
    } else {
        -u_cj
    }
}

pub fn transient_solution(p: &ClampTransientParams) -> Result<TransientSolution, ClampError> {
    if !(p.inductance > 0.0 && p.effective_capacitance > 0.0) {
        return Err(ClampError::NonPositiveReactance);
    }
    if !p.is_underdamped() {
        return Err(ClampError::Overdamped {
            resistance: p.loop_resistance,
            critical: p.critical_resistance(),
        });
    }
    let l = p.inductance;
    let r = p.loop_resistance;
    let alpha = r / (2.0 * l);
    let omega0 = 1.0 / (l * p.effective_capacitance).sqrt();
    let omega_d = (omega0 * omega0 - alpha * alpha).sqrt();
    let amplitude = p.initial_diff.max(0.0) / char_impedance(p);
    Ok(TransientSolution {
        alpha,
        omega0,
        omega_d,
        amplitude,
        roots: [
            Complex64::new(-alpha, omega_d),
            Complex64::new(-alpha, -omega_d),
        ],
    })
}

/// `sqrt(L / C_e - R^2 / 4)`.
fn char_impedance(p: &ClampTransientParams) -> f64 {
    (p.inductance / p.effective_capacitance - 0.25 * p.loop_resistance * p.loop_resistance).sqrt()
}

/// Upper bound of the clamp current for a voltage difference `u_diff_max`
/// when the switch stays on past the current peak.
pub fn peak_current_free(u_diff_max: f64, p: &ClampTransientParams) -> Result<f64, ClampError> {
    transient_solution(p)?;
    Ok(u_diff_max.max(0.0) / char_impedance(p))
}

/// Peak clamp current when the switch on-time `duty * t_sw` ends before the
/// half sine reaches its maximum. Falls back to [`peak_current_free`] when
/// the window contains the maximum.
pub fn peak_current_truncated(
    u_diff_max: f64,
    p: &ClampTransientParams,
    duty: f64,
    t_sw: f64,
) -> Result<f64, ClampError> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(ClampError::InvalidDuty(duty));
    }
    let sol = transient_solution(p)?;
    let free = peak_current_free(u_diff_max, p)?;
    let window = duty * t_sw;
    if sol.peak_time() < window {
        return Ok(free);
    }
    let a = u_diff_max.max(0.0) / char_impedance(p);
    let truncated = a * (-sol.alpha * window).exp() * (sol.omega_d * window).sin();
    Ok(truncated.clamp(0.0, free))
}
