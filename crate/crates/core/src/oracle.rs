// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Self-checks of the deterministic engine against closed forms, the
//! `exp(L·t)` oracle and the forward/backward pairing.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{make_pauli, Complex, DensityMatrix, Effect, Operator2, Pauli, KET_E, KET_G};
use crate::engine::{
    adjoint_rhs, integrate, integrate_forward_raw, postselect_effect_ground, prepare_rho0,
    propagate_backward_with, propagate_forward, Direction, Generator, ModelConfig,
};
use crate::error::Result;
use crate::superop::oracle_expm_propagate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckResult {
    pub max_dev: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(max_dev: f64, tol: f64) -> Self {
        Self { max_dev, tol, pass: max_dev.is_finite() && max_dev < tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct OracleReport {
    pub checks: BTreeMap<String, CheckResult>,
}

impl OracleReport {
    pub fn all_pass(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

type AdjointFn = dyn Fn(&Operator2, &ModelConfig) -> Operator2 + Sync;

/// The engine checks, with a replaceable backward right-hand side so that
/// the suite can be shown to catch a wrong sign.
pub struct OracleSuite {
    adjoint: Box<AdjointFn>,
}

impl Default for OracleSuite {
    fn default() -> Self {
        Self { adjoint: Box::new(adjoint_rhs) }
    }
}

impl OracleSuite {
    pub fn with_adjoint<F>(f: F) -> Self
    where
        F: Fn(&Operator2, &ModelConfig) -> Operator2 + Sync + 'static,
    {
        Self { adjoint: Box::new(f) }
    }

    fn backward(&self, et: &Effect, cfg: &ModelConfig) -> Result<crate::engine::StateTrace> {
        propagate_backward_with(et, cfg, |e| (self.adjoint)(e, cfg))
    }

    fn backward_raw(&self, et: &Operator2, cfg: &ModelConfig) -> Vec<Operator2> {
        let mut raw = integrate(et, cfg.dt, cfg.n_steps(), |e| -(self.adjoint)(e, cfg));
        raw.reverse();
        raw
    }

    /// Run every check around `cfg`. Fails only if `cfg` itself is invalid.
    pub fn run(&self, cfg: &ModelConfig) -> Result<OracleReport> {
        cfg.validate()?;
        let mut checks = BTreeMap::new();
        let mut put = |name: &str, r: CheckResult| {
            checks.insert(name.to_string(), r);
        };

        let (fwd, bwd) = self.analytic_decay(cfg)?;
        put("analytic_decay_forward", CheckResult::new(fwd, 1e-8));
        put("analytic_decay_backward", CheckResult::new(bwd, 1e-8));

        let mut dev: f64 = 0.0;
        for nu in [cfg.nu_r, 0.6, 1.0, 1.4] {
            dev = dev.max(self.expm_deviation(&cfg.with_nu_r(nu))?);
        }
        put("rk4_vs_expm", CheckResult::new(dev, 1e-6));

        put("dual_pairing", CheckResult::new(self.dual_pairing(cfg, 10, 0x5eed)?, 1e-7));
        put("time_reversal", CheckResult::new(self.time_reversal(cfg)?, 1e-8));

        let (trace_dev, neg) = forward_invariants(cfg)?;
        put("trace_preservation", CheckResult::new(trace_dev, 1e-9));
        put("positivity", CheckResult::new(neg, 1e-9));
        put("effect_bounds", CheckResult::new(self.effect_bounds(cfg), 1e-9));

        // reported as 1 / (error reduction on halving dt); fourth order gives
        // 1/16, the gate is 1/6
        put("rk4_order", CheckResult::new(1.0 / rk4_order_ratio(cfg)?, 1.0 / 6.0));
        Ok(OracleReport { checks })
    }

    fn analytic_decay(&self, cfg: &ModelConfig) -> Result<(f64, f64)> {
        let still = ModelConfig { nu_r: 0.0, detuning: 0.0, gamma_phi: 0.0, ..cfg.clone() };
        let fwd = propagate_forward(&DensityMatrix::excited(), &still)?;
        let f = fwd
            .times
            .iter()
            .zip(&fwd.states)
            .map(|(t, s)| (s.m[1][1].re - (-still.gamma1 * t).exp()).abs())
            .fold(0.0, f64::max);
        let bwd = self.backward(&Effect::repair(&Operator2::projector(KET_G)), &still)?;
        let b = bwd
            .times
            .iter()
            .zip(&bwd.states)
            .map(|(t, s)| {
                let want = 1.0 - (-still.gamma1 * (still.t_final - t)).exp();
                (s.m[1][1].re - want).abs().max((s.m[0][0].re - 1.0).abs())
            })
            .fold(0.0, f64::max);
        Ok((f, b))
    }

    fn expm_deviation(&self, cfg: &ModelConfig) -> Result<f64> {
        let rho0 = prepare_rho0(cfg);
        let et = postselect_effect_ground(cfg);
        let fwd = integrate_forward_raw(rho0.op(), cfg)?;
        let bwd = self.backward_raw(et.op(), cfg);
        let n = cfg.n_steps();
        let mut dev: f64 = 0.0;
        for k in (0..=n).step_by(10.max(n / 250)) {
            let t = k as f64 * cfg.dt;
            let f = oracle_expm_propagate(rho0.op(), cfg, t, Direction::Forward);
            let b = oracle_expm_propagate(et.op(), cfg, cfg.t_final - t, Direction::Backward);
            dev = dev.max(fwd[k].max_abs_diff(&f)).max(bwd[k].max_abs_diff(&b));
        }
        let f = oracle_expm_propagate(rho0.op(), cfg, cfg.t_final, Direction::Forward);
        Ok(dev.max(fwd[n].max_abs_diff(&f)))
    }

    /// `max_t |Tr[ρ(t)E(t)] − Tr[ρ(0)E(0)]|` over random pairs.
    pub fn dual_pairing(&self, cfg: &ModelConfig, pairs: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dev: f64 = 0.0;
        for _ in 0..pairs {
            let rho0 = DensityMatrix::repair(&random_positive(&mut rng));
            let e = random_positive(&mut rng);
            let (_, hi) = e.hermitian_eigenvalues();
            let et = Effect::repair(&e.scale_re(1.0 / hi));
            let fwd = integrate_forward_raw(rho0.op(), cfg)?;
            let bwd = self.backward_raw(et.op(), cfg);
            let p0 = (fwd[0] * bwd[0]).trace().re;
            for (r, e) in fwd.iter().zip(&bwd) {
                dev = dev.max(((*r * *e).trace().re - p0).abs());
            }
        }
        Ok(dev)
    }

    fn time_reversal(&self, cfg: &ModelConfig) -> Result<f64> {
        let ideal = ModelConfig { gamma1: 0.0, gamma1b: 0.0, gamma_phi: 0.0, p0: 0.0, p_t: 0.0, ..cfg.clone() };
        let sm = make_pauli(Pauli::Minus);
        let fwd = propagate_forward(&DensityMatrix::pure(KET_E)?, &ideal)?;
        let bwd = self.backward(&Effect::repair(&Operator2::projector(KET_G)), &ideal)?;
        let n = fwd.len() - 1;
        let mut dev: f64 = 0.0;
        for k in 0..=n {
            let e = bwd.states[k];
            let tr = e.trace().re;
            if tr <= 1e-12 {
                return Ok(f64::INFINITY);
            }
            let post = (e * sm).trace().re / tr;
            let pre = (fwd.states[n - k] * sm).trace().re;
            dev = dev.max((post - pre).abs());
        }
        Ok(dev)
    }

    fn effect_bounds(&self, cfg: &ModelConfig) -> f64 {
        let raw = self.backward_raw(postselect_effect_ground(cfg).op(), cfg);
        raw.iter()
            .map(|e| {
                let (lo, hi) = e.hermitian_eigenvalues();
                (-lo).max(hi - 1.0).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

fn random_positive(rng: &mut ChaCha8Rng) -> Operator2 {
    let mut m = Operator2::zero();
    for v in m.m.iter_mut().flatten() {
        *v = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    m * m.adjoint() + Operator2::identity().scale_re(1e-3)
}

fn forward_invariants(cfg: &ModelConfig) -> Result<(f64, f64)> {
    let raw = integrate_forward_raw(prepare_rho0(cfg).op(), cfg)?;
    let mut trace_dev: f64 = 0.0;
    let mut neg: f64 = 0.0;
    for s in &raw {
        trace_dev = trace_dev.max((s.trace() - Complex::new(1.0, 0.0)).norm());
        neg = neg.max(-s.hermitian_eigenvalues().0);
    }
    Ok((trace_dev, neg.max(0.0)))
}

/// Ratio of the maximum deviation from `exp(L·t)` at `dt = 10 ns` to that
/// at `dt = 5 ns`, for a 1 MHz drive.
pub fn rk4_order_ratio(cfg: &ModelConfig) -> Result<f64> {
    let base = ModelConfig { nu_r: 1.0, detuning: 0.0, ..cfg.clone() };
    let dev = |dt: f64| -> Result<f64> {
        let c = ModelConfig { dt, ..base.clone() };
        let rho0 = prepare_rho0(&c);
        let g = Generator::new(&c);
        let raw = integrate(rho0.op(), dt, c.n_steps(), |r| g.forward(r));
        c.validate()?;
        Ok(raw
            .iter()
            .enumerate()
            .map(|(k, s)| s.max_abs_diff(&oracle_expm_propagate(rho0.op(), &c, k as f64 * dt, Direction::Forward)))
            .fold(0.0, f64::max))
    };
    Ok(dev(0.01)? / dev(0.005)?)
}
