//! Backward-Euler discretisation of one arm for a fixed switch and diode
//! pattern.
//!
//! Unknowns of an arm are its clamp currents `iL_k` and the arm current
//! `i`. Every capacitor is eliminated with
//! `u = g u_n + h i_C`, `g = 1 / (1 + dt / (R_leak C))`, `h = g dt / C`,
//! and its terminal voltage is `u + r_c i_C = g u_n + z i_C`, `z = h + r_c`.
//!
//! Module `m` carries switch current `I_m = i + iL_(m-1)` and capacitor
//! current `i_C,m = s_m i + iL_m - (1 - s_m) iL_(m-1)`. Writing KVL around
//! each conducting clamp gives a symmetric tridiagonal system
//! `T x + e i = r`; a blocking clamp contributes the identity row `x_k = 0`.
//! The arm voltage is `v = K + W i + e . x`.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ArmState, ConverterConfig, ConverterState, ModuleParams};

/// Discrete equations of one arm.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmSystem {
    /// Diagonal of `T`, one entry per clamp.
    pub diag: Vec<f64>,
    /// `off[k]` couples clamps `k` and `k + 1`; the last entry is unused.
    pub off: Vec<f64>,
    /// Coefficient of the arm current in each clamp row; also the weight of
    /// each clamp current in the arm voltage.
    pub coupling: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `K`: arm voltage at zero current.
    pub arm_const: f64,
    /// `W`: arm self-resistance seen by the arm current.
    pub arm_self: f64,
}

impl ArmSystem {
    fn with_clamps(m: usize) -> Self {
        Self {
            diag: vec![1.0; m],
            off: vec![0.0; m],
            coupling: vec![0.0; m],
            rhs: vec![0.0; m],
            arm_const: 0.0,
            arm_self: 0.0,
        }
    }
}

/// Discrete equations of both arms for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologyMatrices {
    pub dt: f64,
    pub upper: ArmSystem,
    pub lower: ArmSystem,
}

/// Builds the equations of both arms for gate patterns `gates` and clamp
/// conduction pattern `diodes` (upper, lower), starting from `state`.
pub fn assemble(
    cfg: &ConverterConfig,
    state: &ConverterState,
    gates: (&[bool], &[bool]),
    diodes: (&[bool], &[bool]),
    dt: f64,
) -> TopologyMatrices {
    let build = |modules: &[ModuleParams], arm: &ArmState, i_arm: f64, s: &[bool], d: &[bool]| {
        let mut w = ArmWork::new(cfg, modules);
        w.set_dt(dt);
        w.prepare(arm, i_arm);
        w.diode.copy_from_slice(d);
        w.assemble(&arm.cap_voltages, &arm.clamp_currents, s);
        w.sys
    };
    TopologyMatrices {
        dt,
        upper: build(
            &cfg.upper_arm_modules,
            &state.upper,
            state.arm_current_upper,
            gates.0,
            diodes.0,
        ),
        lower: build(
            &cfg.lower_arm_modules,
            &state.lower,
            state.arm_current_lower,
            gates.1,
            diodes.1,
        ),
    }
}

/// Constants, scratch buffers and the latest solution of one arm.
#[derive(Clone, Debug)]
pub(crate) struct ArmWork {
    pub n: usize,
    pub cap: Vec<f64>,
    pub esr: Vec<f64>,
    pub inv_leak: Vec<f64>,
    pub l_clamp: Vec<f64>,
    pub r_ind: Vec<f64>,
    pub r_diode: Vec<f64>,
    pub v_diode: Vec<f64>,
    pub v_sw: f64,
    pub r_sw: f64,
    dt: f64,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    pub sys: ArmSystem,
    /// Sign of each switch current at the start of the step.
    pub sigma: Vec<f64>,
    pub diode: Vec<bool>,
    p: Vec<f64>,
    q: Vec<f64>,
    cp: Vec<f64>,
    /// Open-circuit arm voltage and self-resistance after eliminating the
    /// clamp currents.
    pub v0: f64,
    pub zeff: f64,
    /// Conducting clamps in the current pattern.
    active: usize,
    pub il: Vec<f64>,
    pub ic: Vec<f64>,
    pub u: Vec<f64>,
}

impl ArmWork {
    pub fn new(cfg: &ConverterConfig, modules: &[ModuleParams]) -> Self {
        let n = modules.len();
        let m = n - 1;
        let clamps: Vec<_> = (0..m).map(|k| cfg.clamp_params(k).clone()).collect();
        Self {
            n,
            cap: modules.iter().map(|p| p.capacitance).collect(),
            esr: modules.iter().map(|p| p.esr).collect(),
            inv_leak: modules
                .iter()
                .map(|p| p.leak_resistance.map_or(0.0, |r| 1.0 / r))
                .collect(),
            l_clamp: clamps.iter().map(|c| c.inductance).collect(),
            r_ind: clamps.iter().map(|c| c.inductor_resistance).collect(),
            r_diode: clamps.iter().map(|c| c.diode_resistance).collect(),
            v_diode: clamps.iter().map(|c| c.diode_drop).collect(),
            v_sw: cfg.switch.on_drop,
            r_sw: cfg.switch.on_resistance,
            dt: f64::NAN,
            g: vec![0.0; n],
            h: vec![0.0; n],
            z: vec![0.0; n],
            sys: ArmSystem::with_clamps(m),
            sigma: vec![1.0; n],
            diode: vec![false; m],
            p: vec![0.0; m],
            q: vec![0.0; m],
            cp: vec![0.0; m],
            v0: 0.0,
            zeff: 0.0,
            active: 0,
            il: vec![0.0; m],
            ic: vec![0.0; n],
            u: vec![0.0; n],
        }
    }

    pub fn set_dt(&mut self, dt: f64) {
        if dt == self.dt {
            return;
        }
        self.dt = dt;
        for i in 0..self.n {
            let g = 1.0 / (1.0 + dt * self.inv_leak[i] / self.cap[i]);
            self.g[i] = g;
            self.h[i] = g * dt / self.cap[i];
            self.z[i] = self.h[i] + self.esr[i];
        }
    }

    /// Switch current signs from the start-of-step currents.
    pub fn prepare(&mut self, arm: &ArmState, i_arm: f64) {
        for m in 0..self.n {
            let i = i_arm + if m > 0 { arm.clamp_currents[m - 1] } else { 0.0 };
            self.sigma[m] = if i >= 0.0 { 1.0 } else { -1.0 };
        }
    }

    /// Fills `sys` for gate pattern `s` and the current diode pattern.
    pub fn assemble(&mut self, u_n: &[f64], il_n: &[f64], s: &[bool]) {
        let n = self.n;
        let m = n - 1;
        let (u_n, s, g, z) = (&u_n[..n], &s[..n], &self.g[..n], &self.z[..n]);
        let sigma = &self.sigma[..n];
        let mut k_const = 0.0;
        let mut w_self = n as f64 * self.r_sw;
        for i in 0..n {
            k_const += self.v_sw * sigma[i];
            if s[i] {
                k_const += g[i] * u_n[i];
                w_self += z[i];
            }
        }
        let sys = &mut self.sys;
        sys.arm_const = k_const;
        sys.arm_self = w_self;
        self.active = 0;
        let il_n = &il_n[..m];
        let diode = &self.diode[..m];
        let (diag, off, coupling, rhs) = (
            &mut sys.diag[..m],
            &mut sys.off[..m],
            &mut sys.coupling[..m],
            &mut sys.rhs[..m],
        );
        let (l, r_ind, r_d, v_d) = (
            &self.l_clamp[..m],
            &self.r_ind[..m],
            &self.r_diode[..m],
            &self.v_diode[..m],
        );
        let inv_dt = 1.0 / self.dt;
        for k in 0..m {
            if !diode[k] {
                diag[k] = 1.0;
                off[k] = 0.0;
                coupling[k] = 0.0;
                rhs[k] = 0.0;
                continue;
            }
            self.active += 1;
            let b1 = !s[k + 1];
            let lk = l[k] * inv_dt;
            let mut d = z[k] + self.r_sw + r_ind[k] + r_d[k] + lk;
            let mut r = -g[k] * u_n[k] - self.v_sw * sigma[k + 1] - v_d[k] + lk * il_n[k];
            if b1 {
                d += z[k + 1];
                r += g[k + 1] * u_n[k + 1];
            }
            diag[k] = d;
            rhs[k] = r;
            coupling[k] = self.r_sw + if s[k] { z[k] } else { 0.0 };
            off[k] = if k + 1 < m && b1 && diode[k + 1] {
                -z[k + 1]
            } else {
                0.0
            };
        }
    }

    /// Solves `T p = r`, `T q = e` and reduces the arm to `v = v0 + zeff i`.
    pub fn solve(&mut self) {
        let sys = &self.sys;
        if self.active == 0 {
            self.v0 = sys.arm_const;
            self.zeff = sys.arm_self;
            return;
        }
        let m = self.n - 1;
        let (p, q, cp) = (&mut self.p[..m], &mut self.q[..m], &mut self.cp[..m]);
        let (diag, off, coupling, rhs) = (
            &sys.diag[..m],
            &sys.off[..m],
            &sys.coupling[..m],
            &sys.rhs[..m],
        );
        let diode = &self.diode[..m];
        let mut a = 0.0;
        let mut prev_c = 0.0;
        let mut prev_p = 0.0;
        let mut prev_q = 0.0;
        for k in 0..m {
            if !diode[k] {
                cp[k] = 0.0;
                p[k] = 0.0;
                q[k] = 0.0;
                a = 0.0;
                prev_c = 0.0;
                continue;
            }
            let inv = 1.0 / (diag[k] - a * prev_c);
            prev_c = off[k] * inv;
            prev_p = (rhs[k] - a * prev_p) * inv;
            prev_q = (coupling[k] - a * prev_q) * inv;
            cp[k] = prev_c;
            p[k] = prev_p;
            q[k] = prev_q;
            a = off[k];
        }
        let mut ep = 0.0;
        let mut eq = 0.0;
        let mut next_p = 0.0;
        let mut next_q = 0.0;
        for k in (0..m).rev() {
            if diode[k] {
                next_p = p[k] - cp[k] * next_p;
                next_q = q[k] - cp[k] * next_q;
                p[k] = next_p;
                q[k] = next_q;
                ep += coupling[k] * next_p;
                eq += coupling[k] * next_q;
            }
        }
        self.v0 = sys.arm_const + ep;
        self.zeff = sys.arm_self - eq;
    }

    /// Recovers clamp currents, capacitor currents and end-of-step
    /// voltages for arm current `i_arm`.
    pub fn finish(&mut self, i_arm: f64, u_n: &[f64], s: &[bool]) {
        let n = self.n;
        let m = n - 1;
        let il = &mut self.il[..m];
        if self.active == 0 {
            il.fill(0.0);
        } else {
            let (p, q, diode) = (&self.p[..m], &self.q[..m], &self.diode[..m]);
            for k in 0..m {
                il[k] = if diode[k] { p[k] - q[k] * i_arm } else { 0.0 };
            }
        }
        let (u_n, s, g, h) = (&u_n[..n], &s[..n], &self.g[..n], &self.h[..n]);
        let (ic, u) = (&mut self.ic[..n], &mut self.u[..n]);
        let mut above = 0.0;
        for i in 0..n {
            let below = if i < m { il[i] } else { 0.0 };
            let c = if s[i] { i_arm + below } else { below - above };
            ic[i] = c;
            u[i] = g[i] * u_n[i] + h[i] * c;
            above = below;
        }
    }

    /// Flips clamps that violate complementarity. Returns `true` when the
    /// pattern changed.
    ///
    /// A blocking clamp turns on when its forward voltage with zero current,
    /// `u_(k+1) + r_c i_C(k+1) - u_k - r_c i_Ck - V_fd - V_sw - r_sw I_(k+1)`,
    /// is positive. With module `k + 1` inserted the diode sees `-u_k` and
    /// stays off.
    pub fn update_diodes(&mut self, i_arm: f64, s: &[bool]) -> bool {
        let n = self.n;
        let m = n - 1;
        let (s, u, ic, esr, sigma) = (
            &s[..n],
            &self.u[..n],
            &self.ic[..n],
            &self.esr[..n],
            &self.sigma[..n],
        );
        let (il, v_d, diode) = (&self.il[..m], &self.v_diode[..m], &mut self.diode[..m]);
        let mut changed = false;
        for k in 0..m {
            if diode[k] {
                if il[k] < 0.0 {
                    diode[k] = false;
                    changed = true;
                }
            } else if !s[k + 1] {
                let v = u[k + 1] + esr[k + 1] * ic[k + 1]
                    - u[k]
                    - esr[k] * ic[k]
                    - v_d[k]
                    - self.v_sw * sigma[k + 1]
                    - self.r_sw * i_arm;
                if v > 0.0 {
                    diode[k] = true;
                    changed = true;
                }
            }
        }
        changed
    }
}
