// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Single-shot simulation of the experiment: sampled preparation, a
//! diffusive heterodyne record of the emitted field, and an imperfect
//! final σz readout. Conditional averages of the records are the Monte
//! Carlo counterpart of the closed-form expectations in [`crate::weak`].
//!
//! The monitored channel is `√(η·γ1)·σ−`; the remaining `(1 − η)·γ1` of
//! the relaxation is ordinary unrecorded dissipation. Per step the
//! conditioned state is updated as
//!
//! ```text
//! ρ' ∝ M ρ M† + (1 − η)γ1·dt·σ−ρσ+ + (γφ/2)·dt·σzρσz
//! M  = I − (i·H + ½γ1·σ+σ− + ¼γφ)·dt + √(η·γ1)·σ−·dJ*
//! dJ = √(η·γ1)·Tr(ρσ−)·dt + dW,   E|dW|² = dt,  E[dW²] = 0
//! ```
//!
//! which agrees with the Euler–Maruyama discretization of the heterodyne
//! stochastic master equation to first order in `dt` and keeps every
//! conditioned state positive.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{make_pauli, Complex, DensityMatrix, Operator2, Pauli};
use crate::engine::{hamiltonian, propagate_backward, propagate_forward, ModelConfig};
use crate::error::{Error, Result};
use crate::weak::{weak_sigma_minus, Post, Prep, DEFAULT_EPS};

/// Shots per reduction chunk. Fixed so that sums do not depend on the
/// number of worker threads.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    G,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    None,
    FinalG,
    FinalE,
}

impl Selection {
    pub fn name(self) -> &'static str {
        match self {
            Selection::None => "none",
            Selection::FinalG => "final_g",
            Selection::FinalE => "final_e",
        }
    }

    pub fn accepts(self, outcome: Level) -> bool {
        match self {
            Selection::None => true,
            Selection::FinalG => outcome == Level::G,
            Selection::FinalE => outcome == Level::E,
        }
    }

    pub fn post(self) -> Post {
        match self {
            Selection::None => Post::None,
            Selection::FinalG => Post::G,
            Selection::FinalE => Post::E,
        }
    }

    const ALL: [Selection; 3] = [Selection::None, Selection::FinalG, Selection::FinalE];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub model: ModelConfig,
    pub n_traj: usize,
    /// Integration step of the stochastic equation (μs).
    pub dt_sde: f64,
    /// Bin width of the stored record (μs), a multiple of `dt_sde`.
    pub dt_record: f64,
    pub master_seed: u64,
    /// Detection efficiency; `None` means `gamma1b / gamma1`.
    pub eta: Option<f64>,
    pub prep: Prep,
}

impl McConfig {
    pub fn new(model: ModelConfig) -> Self {
        Self {
            model,
            n_traj: 10_000,
            dt_sde: 5e-4,
            dt_record: 1e-2,
            master_seed: 0,
            eta: None,
            prep: Prep::E,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(if self.model.gamma1 > 0.0 { self.model.gamma1b / self.model.gamma1 } else { 0.0 })
    }

    /// Amplitude of the monitored channel, `√(η·γ1)`.
    pub fn measurement_amplitude(&self) -> f64 {
        (self.eta() * self.model.gamma1).sqrt()
    }

    pub fn steps_per_bin(&self) -> usize {
        (self.dt_record / self.dt_sde).round() as usize
    }

    pub fn n_bins(&self) -> usize {
        (self.model.t_final / self.dt_record).round() as usize
    }

    /// Model configuration with the integration step set to `dt_sde`.
    pub fn sde_model(&self) -> ModelConfig {
        ModelConfig { dt: self.dt_sde, ..self.model.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.sde_model().validate()?;
        if self.n_traj == 0 {
            return Err(Error::config("n_traj must be at least 1"));
        }
        let eta = self.eta();
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::config(format!("eta = {eta} outside [0, 1]")));
        }
        let ratio = self.dt_record / self.dt_sde;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::config("dt_record must be an integer multiple of dt_sde"));
        }
        let bins = self.model.t_final / self.dt_record;
        if (bins - bins.round()).abs() > 1e-6 {
            return Err(Error::config("dt_record must divide t_final"));
        }
        Ok(())
    }

    /// Midpoints of the record bins (μs).
    pub fn bin_times(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|k| (k as f64 + 0.5) * self.dt_record).collect()
    }
}

/// One simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub shot_index: u64,
    pub initial: Level,
    /// Heterodyne increments summed over each record bin.
    pub record: Vec<Complex>,
    pub final_outcome: Level,
    pub final_true_state_sample: Level,
}

/// Precomputed pieces of the per-step update.
#[derive(Debug, Clone, Copy)]
pub struct SdeKernel {
    m0: Operator2,
    amp: f64,
    unrecorded: f64,
    dephase: f64,
    dt: f64,
    sm: Operator2,
    sp: Operator2,
    sz: Operator2,
}

impl SdeKernel {
    pub fn new(mc: &McConfig) -> Self {
        let cfg = &mc.model;
        let dt = mc.dt_sde;
        let sm = make_pauli(Pauli::Minus);
        let sp = make_pauli(Pauli::Plus);
        let eff = hamiltonian(cfg).scale(Complex::new(0.0, 1.0))
            + (sp * sm).scale_re(0.5 * cfg.gamma1)
            + Operator2::identity().scale_re(0.25 * cfg.gamma_phi);
        Self {
            m0: Operator2::identity() - eff.scale_re(dt),
            amp: mc.measurement_amplitude(),
            unrecorded: (1.0 - mc.eta()) * cfg.gamma1 * dt,
            dephase: 0.5 * cfg.gamma_phi * dt,
            dt,
            sm,
            sp,
            sz: make_pauli(Pauli::Z),
        }
    }

    /// Advance `rho` by one step given the complex Wiener increment `dw`.
    /// Returns the new state and the emitted record increment.
    pub fn step(&self, rho: &Operator2, dw: Complex) -> (Operator2, Complex) {
        // Tr(ρσ−) = ρ_eg
        let sigma_minus = rho.m[1][0];
        let dj = sigma_minus * (self.amp * self.dt) + dw;
        let mut m = self.m0;
        m.m[0][1] += dj.conj() * self.amp;
        let mut next = m * *rho * m.adjoint();
        if self.unrecorded != 0.0 {
            next += (self.sm * *rho * self.sp).scale_re(self.unrecorded);
        }
        if self.dephase != 0.0 {
            next += (self.sz * *rho * self.sz).scale_re(self.dephase);
        }
        let tr = next.trace().re;
        (next.scale_re(1.0 / tr).hermitize(), dj)
    }
}

/// One stochastic step from a validated state.
pub fn sde_step(rho: &DensityMatrix, noise: Complex, mc: &McConfig) -> (DensityMatrix, Complex) {
    let (next, dj) = SdeKernel::new(mc).step(rho.op(), noise);
    (DensityMatrix::repair(&next), dj)
}

/// Generator for shot `shot_index`: the master seed picks the key and the
/// shot index picks the ChaCha stream.
pub fn shot_rng(master_seed: u64, shot_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(shot_index);
    rng
}

fn complex_noise(rng: &mut ChaCha8Rng, sigma: f64) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * sigma, im * sigma)
}

fn sample_initial(prep: Prep, p0: f64, rng: &mut ChaCha8Rng) -> Level {
    let u: f64 = rng.random();
    match prep {
        Prep::E => {
            if u < p0 {
                Level::G
            } else {
                Level::E
            }
        }
        Prep::G => {
            if u < p0 {
                Level::E
            } else {
                Level::G
            }
        }
        Prep::MaximallyMixed => {
            if u < 0.5 {
                Level::G
            } else {
                Level::E
            }
        }
    }
}

/// Simulate one shot, calling `observe(step, ρ)` on the conditioned state
/// at every integration step including `t = 0`.
pub fn simulate_shot_observed<F>(mc: &McConfig, shot_index: u64, kernel: &SdeKernel, mut observe: F) -> TrajectoryRecord
where
    F: FnMut(usize, &Operator2),
{
    let mut rng = shot_rng(mc.master_seed, shot_index);
    let initial = sample_initial(mc.prep, mc.model.p0, &mut rng);
    let mut rho = match initial {
        Level::G => Operator2::diag(1.0, 0.0),
        Level::E => Operator2::diag(0.0, 1.0),
    };
    let sigma = (0.5 * mc.dt_sde).sqrt();
    let per_bin = mc.steps_per_bin();
    let n_bins = mc.n_bins();
    let mut record = Vec::with_capacity(n_bins);
    let mut step = 0;
    observe(step, &rho);
    for _ in 0..n_bins {
        let mut acc = Complex::new(0.0, 0.0);
        for _ in 0..per_bin {
            let dw = complex_noise(&mut rng, sigma);
            let (next, dj) = kernel.step(&rho, dw);
            rho = next;
            acc += dj;
            step += 1;
            observe(step, &rho);
        }
        record.push(acc);
    }
    let u: f64 = rng.random();
    let final_true_state_sample = if u < rho.m[0][0].re { Level::G } else { Level::E };
    let flip: f64 = rng.random();
    let final_outcome = if flip < mc.model.p_t {
        match final_true_state_sample {
            Level::G => Level::E,
            Level::E => Level::G,
        }
    } else {
        final_true_state_sample
    };
    TrajectoryRecord {
        seed: mc.master_seed,
        shot_index,
        initial,
        record,
        final_outcome,
        final_true_state_sample,
    }
}

pub fn simulate_shot(mc: &McConfig, shot_index: u64) -> TrajectoryRecord {
    simulate_shot_observed(mc, shot_index, &SdeKernel::new(mc), |_, _| {})
}

/// Per-bin mean of the calibrated record with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalAverage {
    pub selection: Selection,
    pub times: Vec<f64>,
    pub mean: Vec<Complex>,
    /// Standard error of the real part.
    pub stderr: Vec<f64>,
    pub n_selected: usize,
    pub n_total: usize,
}

#[derive(Debug, Clone)]
struct Sums {
    count: usize,
    sum: Vec<Complex>,
    sum_sq_re: Vec<f64>,
}

impl Sums {
    fn new(n_bins: usize) -> Self {
        Self { count: 0, sum: vec![Complex::new(0.0, 0.0); n_bins], sum_sq_re: vec![0.0; n_bins] }
    }

    fn push(&mut self, calibrated: &[Complex]) {
        self.count += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq_re).zip(calibrated) {
            *s += v;
            *q += v.re * v.re;
        }
    }

    fn merge(&mut self, other: &Sums) {
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq_re.iter_mut().zip(&other.sum_sq_re) {
            *a += b;
        }
    }

    fn average(&self, selection: Selection, times: Vec<f64>, n_total: usize) -> Result<ConditionalAverage> {
        if self.count == 0 {
            return Err(Error::EmptySelection);
        }
        let n = self.count as f64;
        let mean: Vec<Complex> = self.sum.iter().map(|s| s / n).collect();
        let stderr = mean
            .iter()
            .zip(&self.sum_sq_re)
            .map(|(m, q)| {
                if self.count < 2 {
                    f64::INFINITY
                } else {
                    let var = ((q - n * m.re * m.re) / (n - 1.0)).max(0.0);
                    (var / n).sqrt()
                }
            })
            .collect();
        Ok(ConditionalAverage { selection, times, mean, stderr, n_selected: self.count, n_total })
    }
}

fn calibrate(record: &[Complex], mc: &McConfig) -> Vec<Complex> {
    let norm = 1.0 / (mc.measurement_amplitude() * mc.dt_record);
    record.iter().map(|v| v * norm).collect()
}

/// Average `dJ / (√(η·γ1)·dt_record)` over the records that pass `selection`.
pub fn conditional_average(records: &[TrajectoryRecord], selection: Selection, mc: &McConfig) -> Result<ConditionalAverage> {
    let mut sums = Sums::new(mc.n_bins());
    for r in records.iter().filter(|r| selection.accepts(r.final_outcome)) {
        sums.push(&calibrate(&r.record, mc));
    }
    sums.average(selection, mc.bin_times(), records.len())
}

/// Streaming statistics over `n_traj` shots for every selection at once.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    sums: [Sums; 3],
    times: Vec<f64>,
    n_total: usize,
}

impl EnsembleStats {
    pub fn count(&self, selection: Selection) -> usize {
        self.sums[selection.index()].count
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn average(&self, selection: Selection) -> Result<ConditionalAverage> {
        self.sums[selection.index()].average(selection, self.times.clone(), self.n_total)
    }
}

/// Run `mc.n_traj` shots in parallel without keeping the records.
///
/// Shots are reduced in fixed-size chunks combined in index order, so the
/// result is bit-identical for any number of worker threads.
pub fn run_ensemble(mc: &McConfig) -> Result<EnsembleStats> {
    mc.validate()?;
    let kernel = SdeKernel::new(mc);
    let n_bins = mc.n_bins();
    let n_chunks = mc.n_traj.div_ceil(CHUNK);
    let partials: Vec<[Sums; 3]> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut sums = [Sums::new(n_bins), Sums::new(n_bins), Sums::new(n_bins)];
            let end = ((c + 1) * CHUNK).min(mc.n_traj);
            for shot in c * CHUNK..end {
                let rec = simulate_shot_observed(mc, shot as u64, &kernel, |_, _| {});
                let cal = calibrate(&rec.record, mc);
                for sel in Selection::ALL {
                    if sel.accepts(rec.final_outcome) {
                        sums[sel.index()].push(&cal);
                    }
                }
            }
            sums
        })
        .collect();
    let mut total = [Sums::new(n_bins), Sums::new(n_bins), Sums::new(n_bins)];
    for p in &partials {
        for (t, s) in total.iter_mut().zip(p) {
            t.merge(s);
        }
    }
    Ok(EnsembleStats { sums: total, times: mc.bin_times(), n_total: mc.n_traj })
}

/// Closed-form expectation of each calibrated record bin: the conditional
/// value of σ− averaged over the integration steps inside the bin.
pub fn predict_bins(mc: &McConfig, selection: Selection) -> Result<Vec<Complex>> {
    mc.validate()?;
    let cfg = mc.sde_model();
    let forward = propagate_forward(&mc.prep.density(&cfg), &cfg)?;
    let backward = propagate_backward(&selection.post().effect(&cfg), &cfg)?;
    let per_bin = mc.steps_per_bin();
    let mut out = Vec::with_capacity(mc.n_bins());
    for b in 0..mc.n_bins() {
        let mut acc = Complex::new(0.0, 0.0);
        for j in b * per_bin..(b + 1) * per_bin {
            let (v, _) = weak_sigma_minus(&forward.density(j), &backward.effect(j), DEFAULT_EPS)?;
            acc += v;
        }
        out.push(acc / per_bin as f64);
    }
    Ok(out)
}

/// Probability that the readout reports `selection`: `Tr[ρ(T)·E(T)]`.
pub fn predicted_selection_fraction(mc: &McConfig, selection: Selection) -> Result<f64> {
    let cfg = mc.sde_model();
    let forward = propagate_forward(&mc.prep.density(&cfg), &cfg)?;
    let rho_t = forward.density(forward.len() - 1);
    Ok((*rho_t.op() * *selection.post().effect(&cfg).op()).trace().re)
}

/// Per-bin z-scores of the real part against a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub predicted: Vec<Complex>,
    pub z: Vec<f64>,
}

impl Comparison {
    pub fn new(avg: &ConditionalAverage, predicted: Vec<Complex>) -> Self {
        let z = avg
            .mean
            .iter()
            .zip(&avg.stderr)
            .zip(&predicted)
            .map(|((m, se), p)| (m.re - p.re) / se)
            .collect();
        Self { predicted, z }
    }

    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0, |m, z| m.max(z.abs()))
    }

    pub fn fraction_within(&self, bound: f64) -> f64 {
        self.z.iter().filter(|z| z.abs() < bound).count() as f64 / self.z.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::lindblad_rhs;

    fn mc_base() -> McConfig {
        let mut mc = McConfig::new(ModelConfig::default());
        mc.model.t_final = 0.5;
        mc.n_traj = 64;
        mc
    }

    #[test]
    fn zero_noise_no_monitoring_is_an_euler_step() {
        let mut mc = mc_base();
        mc.eta = Some(0.0);
        let rho = DensityMatrix::repair(&Operator2::new([
            [Complex::new(0.4, 0.0), Complex::new(0.1, 0.3)],
            [Complex::new(0.1, -0.3), Complex::new(0.6, 0.0)],
        ]));
        let (next, dj) = sde_step(&rho, Complex::new(0.0, 0.0), &mc);
        let euler = *rho.op() + lindblad_rhs(rho.op(), &mc.model).scale_re(mc.dt_sde);
        assert!(next.op().max_abs_diff(&euler) < 100.0 * mc.dt_sde * mc.dt_sde);
        assert_eq!(dj, Complex::new(0.0, 0.0));
    }

    #[test]
    fn noise_free_record_is_the_calibrated_signal() {
        let mc = mc_base();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure([Complex::new(s, 0.0), Complex::new(s, 0.0)]).unwrap();
        let (_, dj) = sde_step(&rho, Complex::new(0.0, 0.0), &mc);
        let want = mc.measurement_amplitude() * 0.5 * mc.dt_sde;
        assert!((dj.re - want).abs() < 1e-15 && dj.im == 0.0);
    }

    #[test]
    fn determinism_of_single_shots() {
        let mc = mc_base();
        assert_eq!(simulate_shot(&mc, 17), simulate_shot(&mc, 17));
        assert_ne!(simulate_shot(&mc, 17).record, simulate_shot(&mc, 18).record);
        assert_eq!(simulate_shot(&mc, 3).record.len(), 50);
    }

    #[test]
    fn silent_excited_qubit_stays_excited() {
        let mut mc = mc_base();
        mc.model = ModelConfig { gamma1: 0.0, gamma1b: 0.0, nu_r: 0.0, p0: 0.0, p_t: 0.0, t_final: 0.5, ..ModelConfig::default() };
        mc.eta = Some(0.0);
        for shot in 0..50 {
            let r = simulate_shot(&mc, shot);
            assert_eq!(r.initial, Level::E);
            assert_eq!(r.final_true_state_sample, Level::E);
        }
    }

    #[test]
    fn useless_readout_is_a_fair_coin() {
        let mut mc = mc_base();
        mc.model.p_t = 0.5;
        mc.model.t_final = 0.05;
        let n = 4000;
        let g = (0..n).filter(|&s| simulate_shot(&mc, s).final_outcome == Level::G).count();
        let se = (0.25f64 / n as f64).sqrt();
        assert!((g as f64 / n as f64 - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let mc = mc_base();
        let records: Vec<_> = (0..4).map(|s| simulate_shot(&mc, s)).collect();
        let none: Vec<_> = records.iter().filter(|r| r.final_outcome == Level::E).cloned().collect();
        let err = conditional_average(&none, Selection::FinalG, &mc).unwrap_err();
        assert!(matches!(err, Error::EmptySelection));
        assert!(conditional_average(&[], Selection::None, &mc).is_err());
    }

    #[test]
    fn streaming_matches_record_collection() {
        let mut mc = mc_base();
        mc.n_traj = 300;
        let records: Vec<_> = (0..mc.n_traj as u64).map(|s| simulate_shot(&mc, s)).collect();
        let stats = run_ensemble(&mc).unwrap();
        for sel in Selection::ALL {
            let a = conditional_average(&records, sel, &mc).unwrap();
            let b = stats.average(sel).unwrap();
            assert_eq!(a.n_selected, b.n_selected);
            for (x, y) in a.mean.iter().zip(&b.mean) {
                assert!((x - y).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut mc = mc_base();
        assert!(mc.validate().is_ok());
        mc.dt_record = 0.0123;
        assert!(mc.validate().is_err());
        let mut mc = mc_base();
        mc.n_traj = 0;
        assert!(mc.validate().is_err());
        let mut mc = mc_base();
        mc.eta = Some(1.5);
        assert!(mc.validate().is_err());
        let mut mc = mc_base();
        mc.dt_record = 2e-4;
        assert!(mc.validate().is_err());
        assert!((McConfig::new(ModelConfig::default()).eta() - 0.32).abs() < 1e-12);
    }
}
