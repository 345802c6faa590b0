// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Statistical checks of the trajectory simulation against the
//! deterministic engine. Seeds are fixed, so every run is reproducible.

use condfluor::algebra::{Complex, DensityMatrix, Operator2};
use condfluor::engine::{lindblad_rhs, propagate_forward, ModelConfig};
use condfluor::trajectory::{
    predict_bins, predicted_selection_fraction, run_ensemble, sde_step, shot_rng, simulate_shot_observed,
    Comparison, McConfig, SdeKernel, Selection,
};
use condfluor::weak::Prep;
use rand::Rng;
use rand_distr::StandardNormal;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// A mixed state with coherences, away from any fixed point.
fn probe_state() -> DensityMatrix {
    DensityMatrix::new(Operator2::new([
        [Complex::new(0.35, 0.0), Complex::new(0.2, 0.15)],
        [Complex::new(0.2, -0.15), Complex::new(0.65, 0.0)],
    ]))
    .unwrap()
}

fn noise_draws(n: usize, dt: f64) -> Vec<Complex> {
    let mut rng = shot_rng(99, 0);
    let sigma = (0.5 * dt).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(re * sigma, im * sigma)
        })
        .collect()
}

#[test]
fn single_step_mean_is_the_lindblad_step() {
    let mc = McConfig { eta: Some(0.32), ..McConfig::new(ModelConfig::default()) };
    let rho = probe_state();
    let want = *rho.op() + lindblad_rhs(rho.op(), &mc.model).scale_re(mc.dt_sde);
    let steps: Vec<Operator2> =
        noise_draws(100_000, mc.dt_sde).iter().map(|dw| sde_step(&rho, *dw, &mc).0.into_op()).collect();
    let entries: [(&str, fn(&Operator2) -> f64); 3] = [
        ("rho_ee", |r| r.m[1][1].re),
        ("Re rho_ge", |r| r.m[0][1].re),
        ("Im rho_ge", |r| r.m[0][1].im),
    ];
    for (name, f) in entries {
        let xs: Vec<f64> = steps.iter().map(f).collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - f(&want)).abs() < 3.0 * se, "{name}: {m} vs {} (se {se})", f(&want));
    }
}

#[test]
fn record_increment_mean_is_calibrated() {
    let mc = McConfig { eta: Some(0.32), ..McConfig::new(ModelConfig::default()) };
    let rho = probe_state();
    let want = rho.op().m[1][0] * (mc.measurement_amplitude() * mc.dt_sde);
    let dj: Vec<Complex> = noise_draws(100_000, mc.dt_sde).iter().map(|dw| sde_step(&rho, *dw, &mc).1).collect();
    let (m_re, se_re) = mean_and_se(&dj.iter().map(|z| z.re).collect::<Vec<_>>());
    let (m_im, se_im) = mean_and_se(&dj.iter().map(|z| z.im).collect::<Vec<_>>());
    assert!((m_re - want.re).abs() < 3.0 * se_re, "{m_re} vs {}", want.re);
    assert!((m_im - want.im).abs() < 3.0 * se_im, "{m_im} vs {}", want.im);
}

#[test]
fn unraveling_reproduces_the_master_equation() {
    let mut mc = McConfig::new(ModelConfig::default());
    mc.n_traj = 10_000;
    mc.master_seed = 4;
    let kernel = SdeKernel::new(&mc);
    let det = propagate_forward(&mc.prep.density(&mc.sde_model()), &mc.sde_model()).unwrap();
    // sample every 0.25 μs
    let every = (0.25 / mc.dt_sde).round() as usize;
    let n_samples = det.len().div_ceil(every);
    let mut samples = vec![Vec::with_capacity(mc.n_traj); n_samples];
    let mut worst_trace: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    for shot in 0..mc.n_traj as u64 {
        simulate_shot_observed(&mc, shot, &kernel, |step, rho| {
            worst_trace = worst_trace.max((rho.trace().re - 1.0).abs());
            worst_eig = worst_eig.min(rho.hermitian_eigenvalues().0);
            if step % every == 0 {
                samples[step / every].push(*rho);
            }
        });
    }
    assert!(worst_trace < 1e-9, "trace deviation {worst_trace}");
    assert!(worst_eig > -1e-6, "min eigenvalue {worst_eig}");
    for (j, states) in samples.iter().enumerate() {
        let want = det.states[j * every];
        for (name, f) in [
            ("rho_ee", (|r: &Operator2| r.m[1][1].re) as fn(&Operator2) -> f64),
            ("Re rho_ge", |r| r.m[0][1].re),
            ("Im rho_ge", |r| r.m[0][1].im),
        ] {
            let (m, se) = mean_and_se(&states.iter().map(f).collect::<Vec<_>>());
            let tol = 3.0 * se.max(1e-12);
            assert!((m - f(&want)).abs() < tol, "{name} at step {}: {m} vs {} (se {se})", j * every, f(&want));
        }
    }
}

#[test]
fn standard_error_halves_when_shots_quadruple() {
    let mut mc = McConfig::new(ModelConfig::default());
    mc.model.t_final = 0.5;
    mc.dt_record = 0.05;
    mc.master_seed = 8;
    let mean_se = |n: usize| {
        let mc = McConfig { n_traj: n, ..mc.clone() };
        let avg = run_ensemble(&mc).unwrap().average(Selection::None).unwrap();
        avg.stderr.iter().sum::<f64>() / avg.stderr.len() as f64
    };
    let ratio = mean_se(2_000) / mean_se(8_000);
    assert!((ratio - 2.0).abs() < 0.2 * 2.0, "ratio {ratio}");
}

#[test]
fn selection_fraction_matches_the_final_effect() {
    let mut mc = McConfig::new(ModelConfig::default());
    mc.n_traj = 20_000;
    mc.dt_record = 0.05;
    mc.master_seed = 15;
    let stats = run_ensemble(&mc).unwrap();
    for sel in [Selection::FinalG, Selection::FinalE] {
        let p = predicted_selection_fraction(&mc, sel).unwrap();
        let n = mc.n_traj as f64;
        let se = (p * (1.0 - p) / n).sqrt();
        let frac = stats.count(sel) as f64 / n;
        assert!((frac - p).abs() < 3.0 * se, "{}: {frac} vs {p}", sel.name());
    }
    assert_eq!(stats.count(Selection::FinalG) + stats.count(Selection::FinalE), mc.n_traj);
}

#[test]
fn mixed_preparation_with_post_selection() {
    let mut mc = McConfig::new(ModelConfig::default());
    mc.prep = Prep::MaximallyMixed;
    mc.n_traj = 40_000;
    mc.dt_record = 0.1;
    mc.master_seed = 23;
    let avg = run_ensemble(&mc).unwrap().average(Selection::FinalG).unwrap();
    let cmp = Comparison::new(&avg, predict_bins(&mc, Selection::FinalG).unwrap());
    assert!(cmp.z.iter().all(|z| z.abs() < 3.0), "z = {:?}", cmp.z);
}

#[test]
fn small_ensembles_have_wide_errors_not_failures() {
    let mut mc = McConfig::new(ModelConfig::default());
    mc.n_traj = 100;
    mc.master_seed = 1;
    let avg = run_ensemble(&mc).unwrap().average(Selection::FinalG).unwrap();
    let cmp = Comparison::new(&avg, predict_bins(&mc, Selection::FinalG).unwrap());
    assert!(cmp.max_abs_z() < 5.0);
    assert!(avg.stderr.iter().all(|s| *s > 1.0));
}
