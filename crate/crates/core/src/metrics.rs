//! Harmonic distortion of the output voltage and spread of the cycle-averaged
//! module voltages.

use alloc::vec;
use alloc::vec::Vec;

// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::sim::{CycleMean, SimTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("window holds {cycles} fundamental cycles; need an integer count of at least {min}")]
    NonIntegerWindow { cycles: f64, min: usize },
    #[error("fundamental component is below the noise floor")]
    NoFundamental,
    #[error("sampling too coarse: fewer than 4 samples per fundamental cycle")]
    Undersampled,
    #[error("no output capture in trace")]
    NoCapture,
}

pub const MIN_THD_CYCLES: usize = 5;
pub const DEFAULT_BAND: f64 = 0.03;
pub const DEFAULT_CONSECUTIVE: usize = 5;

/// Default upper edge of the distortion bandwidth, `5 f_sw N / 2`.
pub fn default_thd_bandwidth(switching_freq: f64, modules_per_arm: usize) -> f64 {
    5.0 * switching_freq * modules_per_arm as f64 / 2.0
}

/// Total harmonic distortion of a uniformly sampled window of whole
/// fundamental cycles, with harmonics 2 up to `max_harmonic_freq` or the
/// Nyquist frequency, whichever is lower. The dc component is ignored.
///
/// The window is folded into one averaged period first; its harmonic bins
/// are exactly the harmonic bins of the full window.
pub fn thd(
    samples: &[f64],
    dt: f64,
    fundamental_freq: f64,
    max_harmonic_freq: f64,
) -> Result<f64, MetricsError> {
    let cycles_f = samples.len() as f64 * dt * fundamental_freq;
    let cycles = cycles_f.round();
    if cycles < MIN_THD_CYCLES as f64 || (cycles_f - cycles).abs() > 1e-6 * cycles_f {
        return Err(MetricsError::NonIntegerWindow {
            cycles: cycles_f,
            min: MIN_THD_CYCLES,
        });
    }
    let cycles = cycles as usize;
    if samples.len() % cycles != 0 {
        return Err(MetricsError::NonIntegerWindow {
            cycles: cycles_f,
            min: MIN_THD_CYCLES,
        });
    }
    let p = samples.len() / cycles;
    if p < 4 {
        return Err(MetricsError::Undersampled);
    }
    let mut period = vec![0.0; p];
    for chunk in samples.chunks_exact(p) {
        for (a, x) in period.iter_mut().zip(chunk) {
            *a += x;
        }
    }
    let mean = period.iter().sum::<f64>() / (p * cycles) as f64;
    for a in &mut period {
        *a = *a / cycles as f64 - mean;
    }

    let nyquist = p / 2;
    let h_max = ((max_harmonic_freq / fundamental_freq).floor().max(1.0) as usize).min(nyquist);
    // Fundamental by direct correlation; its residual carries every other
    // harmonic without the cancellation of a power difference.
    let w = 2.0 * core::f64::consts::PI / p as f64;
    let (mut a, mut b) = (0.0, 0.0);
    for (i, x) in period.iter().enumerate() {
        let (s, c) = (w * i as f64).sin_cos();
        a += x * c;
        b += x * s;
    }
    let (a, b) = (2.0 * a / p as f64, 2.0 * b / p as f64);
    let fund = (a * a + b * b) / 2.0;
    let total: f64 = period.iter().map(|x| x * x).sum::<f64>() / p as f64;
    if !(fund > 1e-24 * total) {
        return Err(MetricsError::NoFundamental);
    }
    let harmonics = if h_max == nyquist {
        period
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let (s, c) = (w * i as f64).sin_cos();
                let r = x - a * c - b * s;
                r * r
            })
            .sum::<f64>()
            / p as f64
    } else {
        (2..=h_max).map(|h| harmonic_power(&period, h)).sum()
    };
    Ok((harmonics / fund).sqrt())
}

/// Mean-square power of harmonic `h` of one zero-mean period, by Goertzel.
fn harmonic_power(period: &[f64], h: usize) -> f64 {
    let p = period.len();
    let w = 2.0 * core::f64::consts::PI * h as f64 / p as f64;
    let c = 2.0 * w.cos();
    let (mut s1, mut s2) = (0.0, 0.0);
    for &x in period {
        let s0 = x + c * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    let mag2 = s1 * s1 + s2 * s2 - c * s1 * s2;
    let scale = if 2 * h == p { 1.0 } else { 2.0 };
    scale * mag2.max(0.0) / (p * p) as f64
}

/// Distortion of the output voltage held in a trace's capture window.
pub fn trace_thd(trace: &SimTrace, max_harmonic_freq: f64) -> Result<f64, MetricsError> {
    let cap = trace.output_capture.as_ref().ok_or(MetricsError::NoCapture)?;
    thd(&cap.samples, cap.dt, trace.fundamental_freq, max_harmonic_freq)
}

/// Settings of [`spread_metrics`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpreadOptions {
    /// Half-width of the band around the nominal module voltage, per unit.
    pub band: f64,
    /// Cycles in a row that must stay inside the band.
    pub consecutive: usize,
    /// Cycles ending before this time are ignored for convergence.
    pub after: f64,
}

impl Default for SpreadOptions {
    fn default() -> Self {
        Self {
            band: DEFAULT_BAND,
            consecutive: DEFAULT_CONSECUTIVE,
            after: 0.0,
        }
    }
}

/// Per-unit figures of one cycle of module voltage averages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleSpread {
    pub t_end: f64,
    /// Largest `|ū - V_m| / V_m` over both arms.
    pub max_deviation: f64,
    /// Largest `(max ū - min ū) / V_m` of the two arms.
    pub spread: f64,
}

pub fn cycle_spread(c: &CycleMean, v_m: f64) -> CycleSpread {
    let arm = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        (lo, hi)
    };
    let (ul, uh) = arm(&c.upper);
    let (ll, lh) = arm(&c.lower);
    let dev = [ul, uh, ll, lh]
        .iter()
        .map(|x| (x - v_m).abs())
        .fold(0.0, f64::max);
    CycleSpread {
        t_end: c.t_end,
        max_deviation: dev / v_m,
        spread: (uh - ul).max(lh - ll) / v_m,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub thd: Option<f64>,
    pub thd_bandwidth: f64,
    pub band: f64,
    pub spread_final: f64,
    pub max_deviation_final: f64,
    /// Largest deviation seen after `after`.
    pub max_deviation_peak: f64,
    /// Start of the first run of `consecutive` cycles inside the band.
    pub convergence_time: Option<f64>,
    /// Least-squares slope of the spread over the second half of the run,
    /// per unit per second.
    pub drift_rate: Option<f64>,
    pub final_upper: Vec<f64>,
    pub final_lower: Vec<f64>,
    pub series: Vec<CycleSpread>,
}

/// Spread, deviation and convergence of the cycle-averaged module voltages.
/// `thd` is left empty; see [`trace_thd`].
pub fn spread_metrics(trace: &SimTrace, v_m: f64, opts: &SpreadOptions) -> MetricsReport {
    let series: Vec<CycleSpread> = trace.cycle_means.iter().map(|c| cycle_spread(c, v_m)).collect();
    let last = series.last().copied();
    let considered: Vec<(f64, CycleSpread)> = trace
        .cycle_means
        .iter()
        .zip(&series)
        .filter(|(c, _)| c.t_end > opts.after)
        .map(|(c, s)| (c.t_start, *s))
        .collect();
    let need = opts.consecutive.max(1);
    let mut run = 0;
    let mut convergence_time = None;
    for (i, (_, s)) in considered.iter().enumerate() {
        if s.max_deviation <= opts.band {
            run += 1;
            if run == need {
                convergence_time = Some(considered[i + 1 - need].0);
                break;
            }
        } else {
            run = 0;
        }
    }
    let half = &series[series.len() / 2..];
    let drift_rate = least_squares_slope(half.iter().map(|s| (s.t_end, s.spread)));
    let final_cm = trace.cycle_means.last();
    MetricsReport {
        thd: None,
        thd_bandwidth: 0.0,
        band: opts.band,
        spread_final: last.map_or(0.0, |s| s.spread),
        max_deviation_final: last.map_or(0.0, |s| s.max_deviation),
        max_deviation_peak: considered.iter().map(|(_, s)| s.max_deviation).fold(0.0, f64::max),
        convergence_time,
        drift_rate,
        final_upper: final_cm.map_or_else(Vec::new, |c| c.upper.clone()),
        final_lower: final_cm.map_or_else(Vec::new, |c| c.lower.clone()),
        series,
    }
}

/// Slope of the ordinary least-squares line through `points`; `None` with
/// fewer than two distinct abscissae.
pub fn least_squares_slope(points: impl Iterator<Item = (f64, f64)> + Clone) -> Option<f64> {
    let (mut n, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (x, y) in points.clone() {
        n += 1.0;
        sx += x;
        sy += y;
    }
    if n < 2.0 {
        return None;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::sim::EnergyTally;
    use crate::ConverterState;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn sampled(f: impl Fn(f64) -> f64, cycles: usize, per_cycle: usize) -> (Vec<f64>, f64) {
        let dt = 1.0 / (50.0 * per_cycle as f64);
        ((0..cycles * per_cycle).map(|i| f(i as f64 * dt)).collect(), dt)
    }

    #[test]
    fn pure_sine_has_no_distortion() {
        let (x, dt) = sampled(|t| 3.0 * (2.0 * PI * 50.0 * t + 0.3).sin(), 5, 1000);
        assert!(thd(&x, dt, 50.0, 1e9).unwrap() <= 1e-10);
        assert!(thd(&x, dt, 50.0, 5000.0).unwrap() <= 1e-10);
    }

    #[test]
    fn square_wave() {
        // Brute-force partial sums of the odd-harmonic series 1/h.
        let per_cycle = 20_000;
        let limit = per_cycle / 2 - 1;
        let oracle = ((3..=limit).step_by(2).map(|h| 1.0 / (h * h) as f64).sum::<f64>()).sqrt();
        let closed = (PI * PI / 8.0 - 1.0).sqrt();
        assert!((oracle - closed).abs() < 1e-3);
        // Sample midpoints so no sample sits on an edge.
        let (x, dt) = sampled(
            |t| {
                let ph = (50.0 * t + 0.5 / per_cycle as f64).fract();
                if ph < 0.5 { 1.0 } else { -1.0 }
            },
            5,
            per_cycle,
        );
        let full = thd(&x, dt, 50.0, 1e9).unwrap();
        assert!((full - closed).abs() < 2e-3, "{full}");
        let banded = thd(&x, dt, 50.0, 50.0 * 999.0).unwrap();
        let partial = ((3..=999).step_by(2).map(|h| 1.0 / (h * h) as f64).sum::<f64>()).sqrt();
        assert!((banded - partial).abs() < 2e-3, "{banded} vs {partial}");
    }

    #[test]
    fn both_paths_agree() {
        let f = |t: f64| {
            let w = 2.0 * PI * 50.0 * t;
            w.sin() + 0.1 * (3.0 * w).sin() + 0.02 * (7.0 * w + 1.0).cos() + 0.01 * (200.0 * w).sin()
        };
        let (x, dt) = sampled(f, 6, 1000);
        let fast = thd(&x, dt, 50.0, 1e9).unwrap();
        let slow = thd(&x, dt, 50.0, 50.0 * 499.0).unwrap();
        let expect = (0.01f64 + 0.0004 + 0.0001).sqrt();
        assert!((fast - expect).abs() < 1e-9);
        assert!((slow - expect).abs() < 1e-9);
        let narrow = thd(&x, dt, 50.0, 50.0 * 10.0).unwrap();
        assert!((narrow - 0.0104f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn window_errors() {
        let (x, dt) = sampled(|t| (2.0 * PI * 50.0 * t).sin(), 5, 1000);
        assert!(matches!(
            thd(&x[..4500], dt, 50.0, 1e9),
            Err(MetricsError::NonIntegerWindow { .. })
        ));
        assert!(matches!(
            thd(&x[..4000], dt, 50.0, 1e9),
            Err(MetricsError::NonIntegerWindow { .. })
        ));
        let flat = vec![1.0; 5000];
        assert_eq!(thd(&flat, dt, 50.0, 1e9), Err(MetricsError::NoFundamental));
    }

    proptest! {
        #[test]
        fn thd_invariances(scale in 0.01..100.0f64, offset in -50.0..50.0f64,
                           a3 in 0.0..0.3f64, a5 in 0.0..0.3f64) {
            let f = |t: f64| {
                let w = 2.0 * PI * 50.0 * t;
                w.sin() + a3 * (3.0 * w).sin() + a5 * (5.0 * w + 0.4).sin()
            };
            let (x, dt) = sampled(f, 5, 400);
            let base = thd(&x, dt, 50.0, 1e9).unwrap();
            let y: Vec<f64> = x.iter().map(|v| scale * v + offset).collect();
            let other = thd(&y, dt, 50.0, 1e9).unwrap();
            prop_assert!((base - other).abs() < 1e-9 * (1.0 + base));
            prop_assert!(base >= 0.0);
        }
    }

    fn synthetic(cycles: usize, f: impl Fn(f64, usize) -> f64, n: usize) -> SimTrace {
        let cfg = presets::table2_sim();
        let mut t = SimTrace::empty(n, false, 1e-6, 600.0, 50.0, ConverterState::initial(&cfg));
        for c in 0..cycles {
            let t0 = c as f64 * 0.02;
            let t1 = t0 + 0.02;
            t.cycle_means.push(CycleMean {
                t_start: t0,
                t_end: t1,
                upper: (0..n).map(|j| f(t1, j)).collect(),
                lower: (0..n).map(|j| f(t1, n - 1 - j)).collect(),
                arm_current_upper_mean: 0.0,
                arm_current_upper_sq_mean: 0.0,
                arm_current_lower_mean: 0.0,
                arm_current_lower_sq_mean: 0.0,
                cap_current_upper_sq_mean: vec![0.0; n],
                energy: EnergyTally::default(),
                stored: 0.0,
            });
        }
        t
    }

    #[test]
    fn constant_voltages() {
        let t = synthetic(20, |_, _| 600.0, 8);
        let r = spread_metrics(&t, 600.0, &SpreadOptions::default());
        assert_eq!(r.spread_final, 0.0);
        assert_eq!(r.convergence_time, Some(0.0));
        assert_eq!(r.drift_rate, Some(0.0));
    }

    #[test]
    fn linear_divergence() {
        let slope = 0.004;
        let n = 8;
        let t = synthetic(
            100,
            |t, j| 600.0 * (1.0 + slope * t * (j as f64 / (n - 1) as f64 - 0.5)),
            n,
        );
        let r = spread_metrics(&t, 600.0, &SpreadOptions::default());
        let d = r.drift_rate.unwrap();
        assert!((d - slope).abs() < 0.01 * slope, "{d}");
    }

    #[test]
    fn convergence_after_excursion() {
        // Outside the band until 0.5 s, inside afterwards.
        let t = synthetic(
            50,
            |t, j| if t <= 0.5 { 600.0 * (1.0 + 0.1 * j as f64) } else { 600.0 },
            4,
        );
        let r = spread_metrics(&t, 600.0, &SpreadOptions::default());
        let c = r.convergence_time.unwrap();
        assert!((c - 0.5).abs() < 1e-9, "{c}");
        let never = synthetic(50, |_, j| 600.0 * (1.0 + 0.1 * j as f64), 4);
        assert_eq!(spread_metrics(&never, 600.0, &SpreadOptions::default()).convergence_time, None);
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..1000, rot in 1usize..7) {
            let n = 8;
            let v = move |t: f64, j: usize| {
                600.0 + ((seed as f64 + 13.0 * j as f64) * 0.7).sin() * 20.0 * (1.0 + t)
            };
            let a = synthetic(30, v, n);
            let b = synthetic(30, move |t, j| v(t, (j + rot) % n), n);
            let ra = spread_metrics(&a, 600.0, &SpreadOptions::default());
            let rb = spread_metrics(&b, 600.0, &SpreadOptions::default());
            prop_assert_eq!(ra.series, rb.series);
            prop_assert_eq!(ra.convergence_time, rb.convergence_time);
            prop_assert!(ra.spread_final >= 0.0);
        }
    }
}
