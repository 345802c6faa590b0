// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use condfluor::algebra::{expect, make_pauli, DensityMatrix, Effect, Operator2, Pauli, KET_E, KET_G};
use condfluor::detection::{lowpass, FilterSpec, DEFAULT_BANDWIDTH_MHZ};
use condfluor::engine::{
    postselect_effect_ground, prepare_rho0, propagate_backward, propagate_forward, Direction, ModelConfig,
};
use condfluor::oracle::OracleSuite;
use condfluor::superop::oracle_expm_propagate;
use condfluor::trajectory::{predict_bins, predicted_selection_fraction, run_ensemble, Comparison, McConfig, Selection};
use condfluor::weak::{
    build_map, linear_grid, max_abs_slope, post_only_expectation, zero_crossings, ConditionalMap, MapMode, MapRequest,
    Post, Prep,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reference_grid() -> Vec<f64> {
    linear_grid(0.0, 2.0, 0.02).unwrap()
}

fn map(mode: MapMode, prep: Prep, post: Post) -> ConditionalMap {
    build_map(&ModelConfig::default(), &reference_grid(), &MapRequest::new(mode, prep, post)).unwrap()
}

fn max_abs_re(m: &ConditionalMap) -> f64 {
    m.values.iter().flatten().flatten().fold(0.0, |a, v| a.max(v.re.abs()))
}

fn analytic_decay() -> Outcome {
    let cfg = ModelConfig { nu_r: 0.0, ..ModelConfig::default() };
    let fwd = propagate_forward(&DensityMatrix::excited(), &cfg).unwrap();
    let f = fwd
        .times
        .iter()
        .zip(&fwd.states)
        .map(|(t, s)| (s.m[1][1].re - (-cfg.gamma1 * t).exp()).abs())
        .fold(0.0, f64::max);
    let bwd = propagate_backward(&Effect::new(Operator2::projector(KET_G)).unwrap(), &cfg).unwrap();
    let b = bwd
        .times
        .iter()
        .zip(&bwd.states)
        .map(|(t, s)| (s.m[1][1].re - (1.0 - (-cfg.gamma1 * (cfg.t_final - t)).exp())).abs())
        .fold(0.0, f64::max);
    outcome(f < 1e-8 && b < 1e-8, format!("max dev forward {f:.2e}, backward {b:.2e} (tol 1e-8)"))
}

fn oracle_equivalence() -> Outcome {
    let mut dev: f64 = 0.0;
    for nu in [0.6, 1.0, 1.4] {
        let cfg = ModelConfig::default().with_nu_r(nu);
        let rho0 = prepare_rho0(&cfg);
        let et = postselect_effect_ground(&cfg);
        let fwd = propagate_forward(&rho0, &cfg).unwrap();
        let bwd = propagate_backward(&et, &cfg).unwrap();
        for (k, t) in fwd.times.iter().enumerate() {
            let f = oracle_expm_propagate(rho0.op(), &cfg, *t, Direction::Forward);
            let b = oracle_expm_propagate(et.op(), &cfg, cfg.t_final - t, Direction::Backward);
            dev = dev.max(fwd.states[k].max_abs_diff(&f)).max(bwd.states[k].max_abs_diff(&b));
        }
    }
    outcome(dev < 1e-6, format!("max entrywise dev {dev:.2e} over nu_r in {{0.6, 1, 1.4}} (tol 1e-6)"))
}

fn dual_pairing() -> Outcome {
    let cfg = ModelConfig::default();
    let dev = OracleSuite::default().dual_pairing(&cfg, 10, 2026).unwrap();
    outcome(dev < 1e-7, format!("max |Tr[rho(t)E(t)] - Tr[rho(0)E(0)]| = {dev:.2e} over 10 pairs (tol 1e-7)"))
}

fn time_reversal() -> Outcome {
    let mut dev: f64 = 0.0;
    let sm = make_pauli(Pauli::Minus);
    for nu in [0.6, 1.0, 1.4] {
        let cfg = ModelConfig { gamma1: 0.0, gamma1b: 0.0, p0: 0.0, p_t: 0.0, nu_r: nu, ..ModelConfig::default() };
        let fwd = propagate_forward(&DensityMatrix::pure(KET_E).unwrap(), &cfg).unwrap();
        let bwd = propagate_backward(&Effect::new(Operator2::projector(KET_G)).unwrap(), &cfg).unwrap();
        let n = fwd.len() - 1;
        for k in 0..=n {
            let post = post_only_expectation(&bwd.effect(k)).unwrap();
            let pre = expect(&fwd.density(n - k), &sm);
            dev = dev.max((post - pre).norm());
        }
    }
    outcome(dev < 1e-8, format!("max |post-only(t) - pre-only(T - t)| = {dev:.2e} (tol 1e-8)"))
}

fn bound_and_violation() -> Outcome {
    let pre = map(MapMode::PreOnly, Prep::E, Post::None);
    let cond = map(MapMode::PreAndPost, Prep::E, Post::G);
    let pre_max = max_abs_re(&pre);
    let (ext, t, nu) = cond.extremum().unwrap();
    let violating = cond.values.iter().flatten().flatten().filter(|v| v.re.abs() > 0.5).count();
    let cells = pre.times.len() * pre.rabi_freqs.len();
    outcome(
        pre_max <= 0.5 + 1e-9 && violating > 0 && ext.abs() > 0.8 && cells == 251 * 101,
        format!(
            "pre-only max |Re| {pre_max:.6}; pre_and_post has {violating} cells beyond 0.5, extremum {ext:.4} at t = {t:.2} us, nu_r = {nu:.2} MHz"
        ),
    )
}

fn crossings_and_steepness() -> Outcome {
    const T_CUT: f64 = 0.99;
    // crossings expected near nu_r = n / T; allow 15% of that spacing
    let cfg = ModelConfig::default();
    let tol = 0.15 / cfg.t_final;
    let cond = map(MapMode::PreAndPost, Prep::E, Post::G);
    let pre = map(MapMode::PreOnly, Prep::E, Post::None);
    let nu = &cond.rabi_freqs;
    let c = cond.cut(T_CUT).unwrap();
    let u = pre.cut(T_CUT).unwrap();
    let crossings = zero_crossings(nu, c);
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let target = n as f64 / cfg.t_final;
        let d = crossings.iter().map(|x| (x - target).abs()).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    let ratio = max_abs_slope(nu, c) / max_abs_slope(nu, u);
    let shown: Vec<String> = crossings.iter().map(|x| format!("{x:.3}")).collect();
    outcome(
        worst < tol && ratio > 2.0,
        format!(
            "crossings at [{}] MHz, worst distance to n/T {worst:.3} (tol {tol:.3}); slope ratio {ratio:.2} (> 2)",
            shown.join(", ")
        ),
    )
}

fn hermitian_discrimination() -> Outcome {
    let a = map(MapMode::PreAndPost, Prep::E, Post::G);
    let b = map(MapMode::HermitianXw, Prep::E, Post::G);
    let mut diff: f64 = 0.0;
    for (ra, rb) in a.values.iter().zip(&b.values) {
        for (x, y) in ra.iter().zip(rb) {
            if let (Some(x), Some(y)) = (x, y) {
                diff = diff.max((x.re - y.re).abs());
            }
        }
    }
    outcome(diff > 0.1, format!("max |Re<sigma_->w - Re<sigma_x/2>w| = {diff:.4} (> 0.1)"))
}

fn filter_deformation() -> Outcome {
    let cfg = ModelConfig::default();
    let grid = [1.0];
    let mut req = MapRequest::new(MapMode::PreOnly, Prep::E, Post::None);
    let raw = build_map(&cfg, &grid, &req).unwrap();
    req.filter = Some(FilterSpec::first_order(DEFAULT_BANDWIDTH_MHZ));
    let filtered = build_map(&cfg, &grid, &req).unwrap();
    // peak-to-peak over the last microsecond, after the filter transient
    let amp = |m: &ConditionalMap| {
        let vals: Vec<f64> =
            m.times.iter().zip(&m.values).filter(|(t, _)| **t >= 1.5).map(|(_, r)| r[0].unwrap().re).collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi - lo) / 2.0
    };
    let ratio = amp(&filtered) / amp(&raw);

    let y = lowpass(&vec![1.0; 1000], cfg.dt, DEFAULT_BANDWIDTH_MHZ).unwrap();
    let target = 1.0 - (-1.0f64).exp();
    let k = y.iter().position(|&v| v >= target).unwrap();
    let frac = (target - y[k - 1]) / (y[k] - y[k - 1]);
    let tau_ns = 1e3 * cfg.dt * ((k - 1) as f64 + frac);
    outcome(
        (ratio - 0.848).abs() <= 0.01 && (tau_ns - 99.5).abs() <= 1.0,
        format!("amplitude ratio {ratio:.4} (0.848 +/- 0.01), step time constant {tau_ns:.2} ns (99.5 +/- 1)"),
    )
}

fn monte_carlo_closure() -> Outcome {
    let mut mc = McConfig::new(ModelConfig::default().with_nu_r(1.0));
    mc.n_traj = 200_000;
    mc.eta = Some(0.32);
    mc.dt_record = 0.01;
    mc.master_seed = 20_260_101;
    mc.prep = Prep::E;
    let stats = run_ensemble(&mc).unwrap();

    let post = stats.average(Selection::FinalG).unwrap();
    let cmp_post = Comparison::new(&post, predict_bins(&mc, Selection::FinalG).unwrap());
    let all = stats.average(Selection::None).unwrap();
    let cmp_all = Comparison::new(&all, predict_bins(&mc, Selection::None).unwrap());

    let p = predicted_selection_fraction(&mc, Selection::FinalG).unwrap();
    let n = mc.n_traj as f64;
    let frac = stats.count(Selection::FinalG) as f64 / n;
    let z_frac = (frac - p) / (p * (1.0 - p) / n).sqrt();

    let ok = |c: &Comparison| c.fraction_within(3.0) >= 0.99 && c.max_abs_z() < 5.0;
    outcome(
        ok(&cmp_post) && ok(&cmp_all) && z_frac.abs() < 3.0,
        format!(
            "final_g: {:.1}% bins |z| < 3, max |z| {:.2}; none: {:.1}%, max |z| {:.2}; selected {frac:.5} vs {p:.5} (z {z_frac:.2})",
            100.0 * cmp_post.fraction_within(3.0),
            cmp_post.max_abs_z(),
            100.0 * cmp_all.fraction_within(3.0),
            cmp_all.max_abs_z()
        ),
    )
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_condfluor"))
        .args(args)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(dir)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let root = std::env::temp_dir().join(format!("condfluor-acceptance-{}", std::process::id()));
    let runs = [(1, "a"), (1, "b"), (4, "c")];
    let jobs: [&[&str]; 3] = [
        &["map", "--mode", "pre_and_post", "--prep", "e", "--post", "g"],
        &["map", "--mode", "pre_only", "--filtered"],
        &["mc", "--selection", "final_g", "--n-traj", "3000", "--seed", "11"],
    ];
    let files = ["pre_and_post.csv", "pre_only_filtered.csv", "mc_final_g.csv", "mc_final_g_compare.csv"];
    let mut ok = true;
    for (threads, tag) in runs {
        for job in jobs {
            ok &= run_cli(&root.join(tag), threads, job);
        }
    }
    let mut compared = 0;
    for f in files {
        let a = std::fs::read(root.join("a").join(f)).unwrap_or_default();
        for tag in ["b", "c"] {
            let b = std::fs::read(root.join(tag).join(f)).unwrap_or_default();
            ok &= !a.is_empty() && a == b;
            compared += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&root);
    outcome(ok, format!("{compared} CSV pairs byte-identical across repeats and 1 vs 4 threads"))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, f64);
    let criteria: [Criterion; 10] = [
        ("analytic decay", analytic_decay, 1.0),
        ("oracle equivalence", oracle_equivalence, 10.0),
        ("dual pairing", dual_pairing, 10.0),
        ("time-reversal duality", time_reversal, 5.0),
        ("bound and violation", bound_and_violation, 60.0),
        ("zero crossings and steepness", crossings_and_steepness, 30.0),
        ("hermitian discrimination", hermitian_discrimination, 60.0),
        ("filter deformation", filter_deformation, 5.0),
        ("monte carlo closure", monte_carlo_closure, 600.0),
        ("determinism", determinism, f64::INFINITY),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < *budget;
        if !pass {
            failed += 1;
        }
        let budget = if budget.is_finite() { format!(" (budget {budget} s)") } else { String::new() };
        println!(
            "[{}] {:>2}. {name}: {}; {secs:.2} s{budget}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
