use alloc::boxed::Box;

// Inherent once std is in the build graph (dev builds).
#[allow(unused_imports)]
use num_traits::Float;

use super::system::ArmWork;
use super::trace::EnergyTally;
use super::SimError;
use crate::model::{ArmState, ConverterConfig, ConverterState, LoadSpec};
use crate::modulation::GateFrame;

/// Step halvings tried before a diode pattern is declared unresolvable.
const MAX_HALVINGS: u32 = 4;

/// Counters of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepResult {
    /// Largest number of pattern iterations any (sub)step needed.
    pub diode_iterations: usize,
    /// Number of sub-steps taken (1 unless the step was halved).
    pub substeps: u32,
    /// Clamps that started conducting during the step.
    pub clamp_turn_ons: u32,
    /// Clamps whose current was clamped at zero.
    pub clamp_turn_offs: u32,
    /// Modules whose gate changed at the start of the step.
    pub commutations: u32,
}

/// Fixed-step simulator of one leg.
///
/// Each call to [`Simulator::step`] applies the gate pattern valid at the
/// end of the step, charges commutation losses, then solves the
/// backward-Euler equations with the clamp diodes resolved by pattern
/// iteration.
#[derive(Clone, Debug)]
pub struct Simulator {
    cfg: ConverterConfig,
    dt: f64,
    upper: ArmWork,
    lower: ArmWork,
    state: ConverterState,
    tally: EnergyTally,
    v_out: f64,
    /// `(i_u, i_l, i_out, v_out)` of the latest pattern iteration.
    solved: [f64; 4],
}

impl Simulator {
    /// Starts from [`ConverterState::initial`].
    pub fn new(cfg: &ConverterConfig) -> Result<Self, SimError> {
        Self::with_state(cfg, ConverterState::initial(cfg))
    }

    pub fn with_state(cfg: &ConverterConfig, state: ConverterState) -> Result<Self, SimError> {
        crate::model::validate_config(cfg)?;
        let n = cfg.modules_per_arm;
        if state.upper.cap_voltages.len() != n
            || state.lower.cap_voltages.len() != n
            || state.upper.clamp_currents.len() != n - 1
            || state.lower.clamp_currents.len() != n - 1
        {
            return Err(SimError::StateShape);
        }
        let mut upper = ArmWork::new(cfg, &cfg.upper_arm_modules);
        let mut lower = ArmWork::new(cfg, &cfg.lower_arm_modules);
        upper.set_dt(cfg.numerics.time_step);
        lower.set_dt(cfg.numerics.time_step);
        Ok(Self {
            cfg: cfg.clone(),
            dt: cfg.numerics.time_step,
            upper,
            lower,
            state,
            tally: EnergyTally::default(),
            v_out: 0.0,
            solved: [0.0; 4],
        })
    }

    pub fn config(&self) -> &ConverterConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ConverterState {
        &self.state
    }

    pub fn tally(&self) -> &EnergyTally {
        &self.tally
    }

    pub fn time_step(&self) -> f64 {
        self.dt
    }

    /// Overrides the step size (used by convergence studies).
    pub fn set_time_step(&mut self, dt: f64) {
        self.dt = dt;
    }

    /// Replaces the accumulated clock with `t` to avoid summation drift.
    pub fn sync_time(&mut self, t: f64) {
        self.state.time = t;
    }

    /// Output voltage of the last step.
    pub fn v_out(&self) -> f64 {
        self.v_out
    }

    /// Energy held in capacitors, clamp inductors and arm inductors.
    pub fn stored_energy(&self) -> f64 {
        stored_energy(&self.cfg, &self.state)
    }

    /// Sets the gate pattern without charging commutation losses.
    pub fn set_gates(&mut self, upper: &[bool], lower: &[bool]) {
        self.state.upper.gate_series.copy_from_slice(upper);
        self.state.lower.gate_series.copy_from_slice(lower);
    }

    /// Advances one step with the given gate patterns.
    pub fn step(&mut self, upper: &[bool], lower: &[bool]) -> Result<StepResult, SimError> {
        let mut res = StepResult {
            commutations: self.commutate(upper, lower),
            ..StepResult::default()
        };
        self.advance(self.dt, upper, lower, 0, &mut res)?;
        Ok(res)
    }

    /// Charges `E = u |I| (t_on + t_off) / 2` to every module whose gate
    /// changes and takes it from that module's capacitor.
    fn commutate(&mut self, upper: &[bool], lower: &[bool]) -> u32 {
        let t_sw = self.cfg.switch.turn_on_time + self.cfg.switch.turn_off_time;
        let mut count = 0;
        let mut lost = 0.0;
        for (arm, gates, i_arm, modules) in [
            (
                &mut self.state.upper,
                upper,
                self.state.arm_current_upper,
                &self.cfg.upper_arm_modules,
            ),
            (
                &mut self.state.lower,
                lower,
                self.state.arm_current_lower,
                &self.cfg.lower_arm_modules,
            ),
        ] {
            for m in 0..gates.len() {
                if gates[m] == arm.gate_series[m] {
                    continue;
                }
                count += 1;
                arm.gate_series[m] = gates[m];
                if t_sw == 0.0 {
                    continue;
                }
                let i = i_arm + if m > 0 { arm.clamp_currents[m - 1] } else { 0.0 };
                let u = arm.cap_voltages[m];
                if u <= 0.0 {
                    continue;
                }
                let c = modules[m].capacitance;
                let stored = 0.5 * c * u * u;
                let e = (0.5 * u * i.abs() * t_sw).min(stored);
                arm.cap_voltages[m] = (2.0 * (stored - e) / c).sqrt();
                lost += e;
            }
        }
        self.tally.switching += lost;
        count
    }

    fn advance(
        &mut self,
        dt: f64,
        gu: &[bool],
        gl: &[bool],
        depth: u32,
        res: &mut StepResult,
    ) -> Result<(), SimError> {
        match self.resolve(dt, gu, gl) {
            Ok(iters) => {
                res.diode_iterations = res.diode_iterations.max(iters);
                res.substeps += 1;
                self.commit(dt, res)
            }
            Err(iters) if depth < MAX_HALVINGS => {
                res.diode_iterations = res.diode_iterations.max(iters);
                self.advance(0.5 * dt, gu, gl, depth + 1, res)?;
                self.advance(0.5 * dt, gu, gl, depth + 1, res)
            }
            Err(iters) => Err(SimError::UnresolvedDiodes {
                time: self.state.time,
                iterations: iters,
                state: Box::new(self.state.clone()),
            }),
        }
    }

    /// Prescribed output current at `t`, if the load is a current source.
    fn prescribed_output(&self, t: f64) -> Option<f64> {
        match self.cfg.load {
            LoadSpec::CurrentSource {
                amplitude,
                load_angle,
            } => Some(amplitude * (self.cfg.omega() * t - load_angle).sin()),
            LoadSpec::SeriesRl { .. } => None,
        }
    }

    /// Pattern iteration for one step of length `dt`. Returns the number of
    /// iterations, or the iteration count on failure.
    fn resolve(&mut self, dt: f64, gu: &[bool], gl: &[bool]) -> Result<usize, usize> {
        let max_iters = self.cfg.numerics.diode_resolution_max_iters.max(1);
        let st = &self.state;
        for (w, arm, i) in [
            (&mut self.upper, &st.upper, st.arm_current_upper),
            (&mut self.lower, &st.lower, st.arm_current_lower),
        ] {
            w.set_dt(dt);
            w.prepare(arm, i);
            for (d, &il) in w.diode.iter_mut().zip(&arm.clamp_currents) {
                *d = il > 0.0;
            }
        }
        let t_next = st.time + dt;
        let io_next = self.prescribed_output(t_next);
        for iter in 1..=max_iters {
            let st = &self.state;
            self.upper
                .assemble(&st.upper.cap_voltages, &st.upper.clamp_currents, gu);
            self.lower
                .assemble(&st.lower.cap_voltages, &st.lower.clamp_currents, gl);
            self.upper.solve();
            self.lower.solve();
            let (iu, il, io, vout) = self.arm_currents(dt, io_next);
            let st = &self.state;
            self.upper.finish(iu, &st.upper.cap_voltages, gu);
            self.lower.finish(il, &st.lower.cap_voltages, gl);
            let cu = self.upper.update_diodes(iu, gu);
            let cl = self.lower.update_diodes(il, gl);
            self.solved = [iu, il, io, vout];
            if !cu && !cl {
                return Ok(iter);
            }
        }
        Err(max_iters)
    }

    /// Solves the two arm equations
    /// `a_u i_u = b_u - v`, `a_l i_l = b_l + v` with the load relation.
    fn arm_currents(&self, dt: f64, io_next: Option<f64>) -> (f64, f64, f64, f64) {
        let cfg = &self.cfg;
        let st = &self.state;
        let ld = cfg.arm_inductance / dt;
        let half = 0.5 * cfg.dc_voltage;
        let a_u = self.upper.zeff + ld + cfg.arm_resistance;
        let a_l = self.lower.zeff + ld + cfg.arm_resistance;
        let b_u = half - self.upper.v0 + ld * st.arm_current_upper;
        let b_l = half - self.lower.v0 + ld * st.arm_current_lower;
        let (iu, il) = match (io_next, &cfg.load) {
            (Some(io), _) => {
                let ic = (b_u + b_l - 0.5 * (a_u - a_l) * io) / (a_u + a_l);
                (ic + 0.5 * io, ic - 0.5 * io)
            }
            (
                None,
                LoadSpec::SeriesRl {
                    resistance,
                    inductance,
                },
            ) => {
                let lo = inductance / dt;
                let rho = resistance + lo;
                let hist = lo * st.output_current;
                let m11 = a_u + rho;
                let m22 = a_l + rho;
                let r1 = b_u + hist;
                let r2 = b_l - hist;
                let det = m11 * m22 - rho * rho;
                ((r1 * m22 + rho * r2) / det, (m11 * r2 + rho * r1) / det)
            }
            (None, LoadSpec::CurrentSource { .. }) => unreachable!(),
        };
        let vout = b_u - a_u * iu;
        (iu, il, iu - il, vout)
    }

    fn commit(&mut self, dt: f64, res: &mut StepResult) -> Result<(), SimError> {
        let [iu, il, io, vout] = self.solved;
        let mut finite = iu.is_finite() && il.is_finite() && vout.is_finite();
        let t = &mut self.tally;
        for (w, arm, i) in [
            (&self.upper, &mut self.state.upper, iu),
            (&self.lower, &mut self.state.lower, il),
        ] {
            let n = w.n;
            let (u, ic, il_new) = (&w.u[..n], &w.ic[..n], &w.il[..n - 1]);
            let (esr, inv_leak, sigma) = (&w.esr[..n], &w.inv_leak[..n], &w.sigma[..n]);
            let (mut sw, mut esr_e, mut leak, mut sum_u) = (0.0, 0.0, 0.0, 0.0);
            let mut isw = i;
            for m in 0..n {
                if m > 0 {
                    isw = i + il_new[m - 1];
                }
                sw += w.v_sw * sigma[m] * isw + w.r_sw * isw * isw;
                esr_e += esr[m] * ic[m] * ic[m];
                leak += inv_leak[m] * u[m] * u[m];
                sum_u += u[m];
            }
            finite &= sum_u.is_finite();
            let old = &arm.clamp_currents[..n - 1];
            let (mut diode, mut ind) = (0.0, 0.0);
            for k in 0..n - 1 {
                let x = il_new[k];
                if w.diode[k] {
                    diode += dt * (w.v_diode[k] * x + w.r_diode[k] * x * x);
                    ind += dt * w.r_ind[k] * x * x;
                    if old[k] <= 0.0 {
                        res.clamp_turn_ons += 1;
                    }
                } else if old[k] > 0.0 {
                    diode += 0.5 * w.l_clamp[k] * old[k] * old[k];
                    res.clamp_turn_offs += 1;
                }
            }
            t.switch_conduction += dt * sw;
            t.capacitor_esr += dt * esr_e;
            t.leak += dt * leak;
            t.diode += diode;
            t.clamp_inductor += ind;
        }
        if !finite {
            return Err(SimError::Divergence {
                time: self.state.time,
                state: Box::new(self.state.clone()),
            });
        }
        for (w, arm) in [
            (&self.upper, &mut self.state.upper),
            (&self.lower, &mut self.state.lower),
        ] {
            arm.cap_voltages.copy_from_slice(&w.u);
            arm.clamp_currents.copy_from_slice(&w.il);
        }
        let cfg = &self.cfg;
        t.arm_resistance += dt * cfg.arm_resistance * (iu * iu + il * il);
        t.source += dt * 0.5 * cfg.dc_voltage * (iu + il);
        t.load += dt * vout * io;
        self.state.arm_current_upper = iu;
        self.state.arm_current_lower = il;
        self.state.output_current = io;
        self.state.time += dt;
        self.v_out = vout;
        Ok(())
    }
}

/// Energy held in capacitors, clamp inductors and arm inductors.
pub fn stored_energy(cfg: &ConverterConfig, state: &ConverterState) -> f64 {
    let arm = |a: &ArmState, modules: &[crate::model::ModuleParams]| {
        let caps: f64 = a
            .cap_voltages
            .iter()
            .zip(modules)
            .map(|(u, p)| 0.5 * p.capacitance * u * u)
            .sum();
        let inds: f64 = a
            .clamp_currents
            .iter()
            .enumerate()
            .map(|(k, i)| 0.5 * cfg.clamp_params(k).inductance * i * i)
            .sum();
        caps + inds
    };
    arm(&state.upper, &cfg.upper_arm_modules)
        + arm(&state.lower, &cfg.lower_arm_modules)
        + 0.5
            * cfg.arm_inductance
            * (state.arm_current_upper * state.arm_current_upper
                + state.arm_current_lower * state.arm_current_lower)
}

/// One step from `state` with the gate frames valid at the end of the step.
pub fn step(
    cfg: &ConverterConfig,
    state: &ConverterState,
    gates: (&GateFrame, &GateFrame),
    dt: f64,
) -> Result<(ConverterState, StepResult), SimError> {
    let mut sim = Simulator::with_state(cfg, state.clone())?;
    sim.set_time_step(dt);
    let r = sim.step(&gates.0.series_flags, &gates.1.series_flags)?;
    Ok((sim.state, r))
}
