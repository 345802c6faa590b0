// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Deterministic propagation of the qubit state forward in time and of the
//! post-selection effect backward in time.
//!
//! Units: times in μs, rates in 1/μs, frequencies in MHz. Frequencies are
//! turned into angular units (rad/μs) when the Hamiltonian is built, so the
//! generator of the dynamics is `H/ħ` and ħ never appears.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{make_pauli, Complex, DensityMatrix, Effect, Operator2, Pauli};
use crate::error::{Error, Result};

/// Largest rotation per integration step, `dt·2π·ν_R`, in radians.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

/// Physical parameters of the driven, decaying qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Total relaxation rate γ1 (1/μs).
    pub gamma1: f64,
    /// Emission rate into the monitored line, γ1b ≤ γ1 (1/μs).
    pub gamma1b: f64,
    /// Rabi frequency ν_R (MHz).
    pub nu_r: f64,
    /// Drive detuning in the rotating frame (MHz).
    pub detuning: f64,
    /// Duration of one experiment, T (μs).
    pub t_final: f64,
    /// Integration step (μs).
    pub dt: f64,
    /// Ground-state population left over when preparing |e⟩.
    pub p0: f64,
    /// Error probability of the final σz readout.
    pub p_t: f64,
    /// Pure dephasing rate (1/μs). Not part of the reference model.
    pub gamma_phi: f64,
    /// Qubit frequency (MHz). Metadata only; dynamics are in the rotating frame.
    pub nu_q: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            gamma1: 1.0 / 16.0,
            gamma1b: 0.02,
            nu_r: 1.0,
            detuning: 0.0,
            t_final: 2.5,
            dt: 1e-3,
            p0: 0.154,
            p_t: 0.05,
            gamma_phi: 0.0,
            nu_q: 5190.0,
        }
    }
}

impl ModelConfig {
    pub fn with_nu_r(&self, nu_r: f64) -> Self {
        Self { nu_r, ..self.clone() }
    }

    /// Number of integration steps from 0 to T.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma1,
            self.gamma1b,
            self.nu_r,
            self.detuning,
            self.t_final,
            self.dt,
            self.p0,
            self.p_t,
            self.gamma_phi,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("model parameters must be finite"));
        }
        if self.gamma1 < 0.0 || self.gamma1b < 0.0 || self.gamma_phi < 0.0 {
            return Err(Error::config("rates must be non-negative"));
        }
        if self.gamma1b > self.gamma1 {
            return Err(Error::config(format!(
                "gamma1b = {} exceeds total relaxation gamma1 = {}",
                self.gamma1b, self.gamma1
            )));
        }
        for (name, p) in [("p0", self.p0), ("p_t", self.p_t)] {
            if !(0.0..=0.5).contains(&p) {
                return Err(Error::config(format!("{name} = {p} outside [0, 0.5]")));
            }
        }
        if self.dt <= 0.0 {
            return Err(Error::config("dt must be positive"));
        }
        if self.t_final <= 0.0 {
            return Err(Error::config("t_final must be positive"));
        }
        let n = self.n_steps();
        if n == 0 || (n as f64 * self.dt - self.t_final).abs() > 1e-9 {
            return Err(Error::config(format!(
                "dt = {} does not divide t_final = {}",
                self.dt, self.t_final
            )));
        }
        let omega = 2.0 * PI * self.nu_r.abs().max(self.detuning.abs());
        if self.dt * omega >= MAX_PHASE_PER_STEP {
            return Err(Error::config(format!(
                "step too coarse: dt*2*pi*nu = {:.4} rad >= {MAX_PHASE_PER_STEP}",
                self.dt * omega
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| k as f64 * self.dt).collect()
    }
}

/// Which way a trace was integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// States sampled on the integration grid, always in increasing time order.
#[derive(Debug, Clone)]
pub struct StateTrace {
    pub times: Vec<f64>,
    pub states: Vec<Operator2>,
    pub direction: Direction,
}

impl StateTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn density(&self, k: usize) -> DensityMatrix {
        DensityMatrix::repair(&self.states[k])
    }

    pub fn effect(&self, k: usize) -> Effect {
        Effect::repair(&self.states[k])
    }
}

/// `H/ħ = π·Δ·σz + π·ν_R·σy` in rad/μs.
pub fn hamiltonian(cfg: &ModelConfig) -> Operator2 {
    make_pauli(Pauli::Z).scale_re(PI * cfg.detuning) + make_pauli(Pauli::Y).scale_re(PI * cfg.nu_r)
}

/// `ρ(0) = (1 − p0)|e⟩⟨e| + p0|g⟩⟨g|`.
pub fn prepare_rho0(cfg: &ModelConfig) -> DensityMatrix {
    DensityMatrix::repair(&Operator2::diag(cfg.p0, 1.0 - cfg.p0))
}

/// Imperfect ground preparation, the mirror image of [`prepare_rho0`].
pub fn prepare_rho0_ground(cfg: &ModelConfig) -> DensityMatrix {
    DensityMatrix::repair(&Operator2::diag(1.0 - cfg.p0, cfg.p0))
}

/// Effect of the readout outcome "g": `(1 − pT)|g⟩⟨g| + pT|e⟩⟨e|`.
pub fn postselect_effect_ground(cfg: &ModelConfig) -> Effect {
    Effect::repair(&Operator2::diag(1.0 - cfg.p_t, cfg.p_t))
}

/// Effect of the readout outcome "e": `pT|g⟩⟨g| + (1 − pT)|e⟩⟨e|`.
pub fn postselect_effect_excited(cfg: &ModelConfig) -> Effect {
    Effect::repair(&Operator2::diag(cfg.p_t, 1.0 - cfg.p_t))
}

/// The generator of the dynamics with everything precomputed.
#[derive(Debug, Clone, Copy)]
pub struct Generator {
    h: Operator2,
    gamma1: f64,
    gamma_phi: f64,
    sm: Operator2,
    sp: Operator2,
    sz: Operator2,
    n_e: Operator2,
}

impl Generator {
    pub fn new(cfg: &ModelConfig) -> Self {
        let sm = make_pauli(Pauli::Minus);
        let sp = make_pauli(Pauli::Plus);
        Self {
            h: hamiltonian(cfg),
            gamma1: cfg.gamma1,
            gamma_phi: cfg.gamma_phi,
            sm,
            sp,
            sz: make_pauli(Pauli::Z),
            n_e: sp * sm,
        }
    }

    pub fn hamiltonian(&self) -> &Operator2 {
        &self.h
    }

    /// `dρ/dt = −i[H/ħ, ρ] + γ1(σ−ρσ+ − ½{σ+σ−, ρ}) + (γφ/2)(σzρσz − ρ)`.
    pub fn forward(&self, rho: &Operator2) -> Operator2 {
        let mut out = self.h.commutator(rho).scale(Complex::new(0.0, -1.0));
        if self.gamma1 != 0.0 {
            let jump = self.sm * *rho * self.sp;
            let anti = self.n_e.anticommutator(rho).scale_re(0.5);
            out += (jump - anti).scale_re(self.gamma1);
        }
        if self.gamma_phi != 0.0 {
            out += (self.sz * *rho * self.sz - *rho).scale_re(0.5 * self.gamma_phi);
        }
        out
    }

    /// `dE/dt = −i[H/ħ, E] − γ1(σ+Eσ− − ½{σ+σ−, E}) − (γφ/2)(σzEσz − E)`.
    pub fn adjoint(&self, e: &Operator2) -> Operator2 {
        let mut out = self.h.commutator(e).scale(Complex::new(0.0, -1.0));
        if self.gamma1 != 0.0 {
            let jump = self.sp * *e * self.sm;
            let anti = self.n_e.anticommutator(e).scale_re(0.5);
            out += (jump - anti).scale_re(-self.gamma1);
        }
        if self.gamma_phi != 0.0 {
            out += (self.sz * *e * self.sz - *e).scale_re(-0.5 * self.gamma_phi);
        }
        out
    }
}

pub fn lindblad_rhs(rho: &Operator2, cfg: &ModelConfig) -> Operator2 {
    Generator::new(cfg).forward(rho)
}

pub fn adjoint_rhs(e: &Operator2, cfg: &ModelConfig) -> Operator2 {
    Generator::new(cfg).adjoint(e)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(y: &Operator2, dt: f64, f: &F) -> Operator2
where
    F: Fn(&Operator2) -> Operator2,
{
    let k1 = f(y);
    let k2 = f(&(*y + k1.scale_re(0.5 * dt)));
    let k3 = f(&(*y + k2.scale_re(0.5 * dt)));
    let k4 = f(&(*y + k3.scale_re(dt)));
    *y + (k1 + k2.scale_re(2.0) + k3.scale_re(2.0) + k4).scale_re(dt / 6.0)
}

/// Fixed-step RK4 from `y0`, returning every step including the start.
/// Samples are raw integrator states; repair happens at the call site.
pub fn integrate<F>(y0: &Operator2, dt: f64, n_steps: usize, f: F) -> Vec<Operator2>
where
    F: Fn(&Operator2) -> Operator2,
{
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut y = *y0;
    out.push(y);
    for _ in 0..n_steps {
        y = rk4_step(&y, dt, &f);
        out.push(y);
    }
    out
}

/// Raw forward integration without repair of the stored samples.
pub fn integrate_forward_raw(rho0: &Operator2, cfg: &ModelConfig) -> Result<Vec<Operator2>> {
    cfg.validate()?;
    let g = Generator::new(cfg);
    Ok(integrate(rho0, cfg.dt, cfg.n_steps(), |r| g.forward(r)))
}

pub fn propagate_forward(rho0: &DensityMatrix, cfg: &ModelConfig) -> Result<StateTrace> {
    let raw = integrate_forward_raw(rho0.op(), cfg)?;
    Ok(StateTrace {
        times: cfg.times(),
        states: raw.iter().map(|s| DensityMatrix::repair(s).into_op()).collect(),
        direction: Direction::Forward,
    })
}

/// Backward propagation with a caller-supplied `dE/dt` right-hand side.
///
/// Integrates `dE/dτ = −rhs(E)` forward in `τ = T − t` and reverses the
/// samples into increasing-`t` order.
pub fn propagate_backward_with<F>(et: &Effect, cfg: &ModelConfig, rhs: F) -> Result<StateTrace>
where
    F: Fn(&Operator2) -> Operator2,
{
    cfg.validate()?;
    let mut raw = integrate(et.op(), cfg.dt, cfg.n_steps(), |e| -rhs(e));
    raw.reverse();
    Ok(StateTrace {
        times: cfg.times(),
        states: raw.iter().map(|s| Effect::repair(s).into_op()).collect(),
        direction: Direction::Backward,
    })
}

pub fn propagate_backward(et: &Effect, cfg: &ModelConfig) -> Result<StateTrace> {
    let g = Generator::new(cfg);
    propagate_backward_with(et, cfg, |e| g.adjoint(e))
}
