//! Level-adjusted phase-shifted carrier modulation.
//!
//! Each module compares its own reference against a unit triangular carrier
//! on `[0, 1]`. Carriers are spread uniformly in phase (`2π/N` apart) and
//! shifted vertically by a per-module displacement `δ_j`; subtracting `δ_j`
//! from the reference is equivalent to lifting the carrier by `δ_j`.
//!
//! The printed upper-arm phase vector in the source material starts
//! `[0, π/N, 2π/N, ...]`, which contradicts its own `2π/N` spacing rule. This
//! module uses the uniform `2π/N` spacing throughout.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::model::ConverterConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    Upper,
    Lower,
}

/// How the sinusoidal reference reaches the comparators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DelayModel {
    /// Continuous (naturally sampled) reference.
    #[default]
    None,
    /// Reference sampled at `2 f_sw` on a common clock and held between
    /// samples.
    ZeroOrderHold,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulationError {
    #[error("at least two modules per arm required, got {0}")]
    TooFewModules(usize),
    #[error("total displacement must be a finite value >= 0, got {0}")]
    NegativeDisplacement(f64),
    #[error("carrier vectors must both have length {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("displacements must be non-increasing (index {0})")]
    NotMonotone(usize),
    #[error("displacements must sum to zero, got {0:e}")]
    NonZeroSum(f64),
    #[error("carrier frequency must be positive")]
    BadFrequency,
}

/// Per-arm carrier description.
#[derive(Clone, Debug, PartialEq)]
pub struct CarrierSet {
    phases: Vec<f64>,
    displacements: Vec<f64>,
    carrier_freq: f64,
}

pub const DISPLACEMENT_SUM_TOL: f64 = 1e-12;

impl CarrierSet {
    pub fn new(
        phases: Vec<f64>,
        displacements: Vec<f64>,
        carrier_freq: f64,
    ) -> Result<Self, ModulationError> {
        let n = phases.len();
        if displacements.len() != n {
            return Err(ModulationError::LengthMismatch {
                expected: n,
                found: displacements.len(),
            });
        }
        if n < 2 {
            return Err(ModulationError::TooFewModules(n));
        }
        if !(carrier_freq.is_finite() && carrier_freq > 0.0) {
            return Err(ModulationError::BadFrequency);
        }
        if let Some(j) = displacements.windows(2).position(|w| w[1] > w[0]) {
            return Err(ModulationError::NotMonotone(j + 1));
        }
        let sum: f64 = displacements.iter().sum();
        if sum.abs() > DISPLACEMENT_SUM_TOL {
            return Err(ModulationError::NonZeroSum(sum));
        }
        Ok(Self {
            phases,
            displacements,
            carrier_freq,
        })
    }

    /// Carrier set of one arm: uniform phases (reversed for the lower arm)
    /// and the linear displacement profile for `total_displacement`.
    pub fn for_arm(
        arm: Arm,
        n: usize,
        total_displacement: f64,
        carrier_freq: f64,
    ) -> Result<Self, ModulationError> {
        let (upper, lower) = carrier_phase_vectors(n)?;
        let phases = match arm {
            Arm::Upper => upper,
            Arm::Lower => lower,
        };
        Self::new(
            phases,
            displacement_vector(n, total_displacement)?,
            carrier_freq,
        )
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn displacements(&self) -> &[f64] {
        &self.displacements
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    /// Carrier `j` (0-based) at time `t`.
    pub fn carrier(&self, j: usize, t: f64) -> f64 {
        triangle(t, self.phases[j], self.carrier_freq)
    }
}

/// `δ_j = Δ (1/2 - (j-1)/(N-1))` for `j = 1..N`.
pub fn displacement_vector(n: usize, total: f64) -> Result<Vec<f64>, ModulationError> {
    if n < 2 {
        return Err(ModulationError::TooFewModules(n));
    }
    if !(total.is_finite() && total >= 0.0) {
        return Err(ModulationError::NegativeDisplacement(total));
    }
    let span = (n - 1) as f64;
    let mut d: Vec<f64> = (0..n).map(|j| total * (0.5 - j as f64 / span)).collect();
    // Mirror pairs so the sum cancels exactly in floating point.
    for j in 0..n / 2 {
        d[n - 1 - j] = -d[j];
    }
    if n % 2 == 1 {
        d[n / 2] = 0.0;
    }
    Ok(d)
}

/// Upper-arm phases `2π (j-1) / N` and the reversed lower-arm vector.
pub fn carrier_phase_vectors(n: usize) -> Result<(Vec<f64>, Vec<f64>), ModulationError> {
    if n < 2 {
        return Err(ModulationError::TooFewModules(n));
    }
    let upper: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let lower = upper.iter().rev().copied().collect();
    Ok((upper, lower))
}

/// Symmetric unit triangle: 0 at phase 0, 1 half a period later.
///
/// The carrier with phase `phase` lags the zero-phase carrier by
/// `phase / (2π f)` seconds.
pub fn triangle(t: f64, phase: f64, freq: f64) -> f64 {
    let x = freq * t - phase / (2.0 * PI);
    triangle_frac(x - x.floor())
}

#[inline]
fn triangle_frac(x: f64) -> f64 {
    if x < 0.5 {
        2.0 * x
    } else {
        2.0 * (1.0 - x)
    }
}

/// Undisplaced arm reference: `(1 - m sin ωt)/2` for the upper arm and its
/// complement for the lower arm.
pub fn arm_reference(t: f64, arm: Arm, modulation_index: f64, omega: f64) -> f64 {
    let s = modulation_index * (omega * t).sin();
    match arm {
        Arm::Upper => 0.5 * (1.0 - s),
        Arm::Lower => 0.5 * (1.0 + s),
    }
}

/// Reference of module `j` (0-based): arm reference minus `δ_j`.
pub fn module_reference(
    t: f64,
    j: usize,
    arm: Arm,
    cfg: &ConverterConfig,
    carriers: &CarrierSet,
) -> f64 {
    arm_reference(t, arm, cfg.modulation_index, cfg.omega()) - carriers.displacements[j]
}

/// Mean of the module references of one arm.
pub fn effective_arm_modulation(
    t: f64,
    arm: Arm,
    cfg: &ConverterConfig,
    carriers: &CarrierSet,
) -> f64 {
    let n = carriers.len();
    (0..n)
        .map(|j| module_reference(t, j, arm, cfg, carriers))
        .sum::<f64>()
        / n as f64
}

/// Gate state of one arm at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct GateFrame {
    pub time: f64,
    /// `true`: module inserted (upper switch on, lower switch off).
    pub series_flags: Vec<bool>,
}

impl GateFrame {
    pub fn inserted_count(&self) -> usize {
        self.series_flags.iter().filter(|&&s| s).count()
    }
}

/// Instant at which the held reference was last sampled.
pub fn hold_instant(t: f64, switching_freq: f64) -> f64 {
    let rate = 2.0 * switching_freq;
    // The nudge keeps exact grid multiples from rounding down a sample.
    let k = (t * rate + 1e-9).floor();
    k / rate
}

/// Reference time seen by the comparators under `delay`.
pub fn reference_time(t: f64, switching_freq: f64, delay: DelayModel) -> f64 {
    match delay {
        DelayModel::None => t,
        DelayModel::ZeroOrderHold => hold_instant(t, switching_freq),
    }
}

/// Gate frames of both arms. Ties between reference and carrier insert the
/// module.
pub fn gate_signals(
    t: f64,
    cfg: &ConverterConfig,
    carriers_upper: &CarrierSet,
    carriers_lower: &CarrierSet,
    delay: DelayModel,
) -> (GateFrame, GateFrame) {
    let tr = reference_time(t, cfg.switching_freq, delay);
    let frame = |arm: Arm, c: &CarrierSet| {
        let r = arm_reference(tr, arm, cfg.modulation_index, cfg.omega());
        GateFrame {
            time: t,
            series_flags: (0..c.len())
                .map(|j| r - c.displacements[j] >= c.carrier(j, t))
                .collect(),
        }
    };
    (
        frame(Arm::Upper, carriers_upper),
        frame(Arm::Lower, carriers_lower),
    )
}

/// Allocation-free gate evaluation used inside the simulation loop.
#[derive(Clone, Debug)]
pub struct GateGenerator {
    modulation_index: f64,
    omega: f64,
    carrier_freq: f64,
    delay: DelayModel,
    /// Phase lag of each carrier in carrier periods.
    lag_upper: Vec<f64>,
    lag_lower: Vec<f64>,
    disp_upper: Vec<f64>,
    disp_lower: Vec<f64>,
}

impl GateGenerator {
    pub fn new(
        cfg: &ConverterConfig,
        carriers_upper: &CarrierSet,
        carriers_lower: &CarrierSet,
        delay: DelayModel,
    ) -> Self {
        let lag = |c: &CarrierSet| c.phases.iter().map(|p| p / (2.0 * PI)).collect();
        Self {
            modulation_index: cfg.modulation_index,
            omega: cfg.omega(),
            carrier_freq: carriers_upper.carrier_freq,
            delay,
            lag_upper: lag(carriers_upper),
            lag_lower: lag(carriers_lower),
            disp_upper: carriers_upper.displacements.clone(),
            disp_lower: carriers_lower.displacements.clone(),
        }
    }

    /// Swaps in new displacement profiles (piecewise-constant schedules).
    pub fn set_displacements(&mut self, upper: &CarrierSet, lower: &CarrierSet) {
        self.disp_upper.clone_from(&upper.displacements);
        self.disp_lower.clone_from(&lower.displacements);
    }

    /// Writes the gate state of both arms at `t`.
    pub fn evaluate(&self, t: f64, upper: &mut [bool], lower: &mut [bool]) {
        let tr = reference_time(t, self.carrier_freq, self.delay);
        let s = self.modulation_index * (self.omega * tr).sin();
        let ru = 0.5 * (1.0 - s);
        let rl = 0.5 * (1.0 + s);
        let x = self.carrier_freq * t;
        let x0 = x - x.floor();
        fill(x0, ru, &self.lag_upper, &self.disp_upper, upper);
        fill(x0, rl, &self.lag_lower, &self.disp_lower, lower);
    }
}

#[inline]
fn fill(x0: f64, reference: f64, lags: &[f64], disp: &[f64], out: &mut [bool]) {
    for ((o, &lag), &d) in out.iter_mut().zip(lags).zip(disp) {
        let mut x = x0 - lag;
        if x < 0.0 {
            x += 1.0;
        }
        *o = reference - d >= triangle_frac(x);
    }
}
