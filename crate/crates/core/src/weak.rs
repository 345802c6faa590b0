// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Conditional expectations from a forward state and a backward effect.
//!
//! With both past (ρ) and future (E) knowledge the conditional average of
//! an operator `A` is `Tr(ρ E A) / Tr(ρ E)`, with the operator order as
//! written. For `A = σ−` this is the weak value `⟨σ−⟩w`; its real part is
//! what the fluorescence signal measures.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{make_pauli, Complex, DensityMatrix, Effect, Operator2, Pauli};
use crate::detection::{lowpass_cascade, FilterSpec};
use crate::engine::{
    postselect_effect_excited, postselect_effect_ground, prepare_rho0, prepare_rho0_ground,
    propagate_backward, propagate_forward, ModelConfig,
};
use crate::error::{Error, Result};

/// Default guard on `Tr(ρE)`.
pub const DEFAULT_EPS: f64 = 1e-12;

/// Macro-realism bound on `|Re⟨σ−⟩|` for unconditional averages.
pub const UNCONDITIONAL_BOUND: f64 = 0.5;

/// Weak value of σ− and the denominator `Re Tr(ρE)`.
pub fn weak_sigma_minus(rho: &DensityMatrix, e: &Effect, eps: f64) -> Result<(Complex, f64)> {
    let rho_e = *rho.op() * *e.op();
    let denom = rho_e.trace().re;
    if denom <= eps {
        return Err(Error::SingularConditioning { denom });
    }
    let value = (rho_e * make_pauli(Pauli::Minus)).trace() / denom;
    Ok((value, denom))
}

/// Conditional average `Tr(ρEA)/Tr(ρE)` of an arbitrary operator.
pub fn weak_hermitian(rho: &DensityMatrix, e: &Effect, a: &Operator2, eps: f64) -> Result<Complex> {
    let rho_e = *rho.op() * *e.op();
    let denom = rho_e.trace().re;
    if denom <= eps {
        return Err(Error::SingularConditioning { denom });
    }
    Ok((rho_e * *a).trace() / denom)
}

/// `σx / 2`, the hermitian part of σ−.
pub fn half_sigma_x() -> Operator2 {
    make_pauli(Pauli::X).scale_re(0.5)
}

/// Average of σ− conditioned on the future only: `Tr(Eσ−)/Tr(E)`.
pub fn post_only_expectation(e: &Effect) -> Result<Complex> {
    let tr = e.op().trace().re;
    if tr <= 1e-12 {
        return Err(Error::SingularConditioning { denom: tr });
    }
    Ok((*e.op() * make_pauli(Pauli::Minus)).trace() / tr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    PreOnly,
    PostOnly,
    PreAndPost,
    HermitianXw,
}

impl MapMode {
    pub fn name(self) -> &'static str {
        match self {
            MapMode::PreOnly => "pre_only",
            MapMode::PostOnly => "post_only",
            MapMode::PreAndPost => "pre_and_post",
            MapMode::HermitianXw => "hermitian_xw",
        }
    }

    pub fn is_conditioned(self) -> bool {
        !matches!(self, MapMode::PreOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prep {
    E,
    G,
    #[serde(alias = "mixed")]
    MaximallyMixed,
}

impl Prep {
    pub fn density(self, cfg: &ModelConfig) -> DensityMatrix {
        match self {
            Prep::E => prepare_rho0(cfg),
            Prep::G => prepare_rho0_ground(cfg),
            Prep::MaximallyMixed => DensityMatrix::maximally_mixed(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Post {
    G,
    E,
    None,
}

impl Post {
    pub fn effect(self, cfg: &ModelConfig) -> Effect {
        match self {
            Post::G => postselect_effect_ground(cfg),
            Post::E => postselect_effect_excited(cfg),
            Post::None => Effect::identity(),
        }
    }
}

/// What to put in a [`ConditionalMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct MapRequest {
    pub mode: MapMode,
    pub prep: Prep,
    pub post: Post,
    /// Spacing of the stored time axis (μs); a multiple of the model `dt`.
    pub t_step: f64,
    pub eps: f64,
    /// Detection filter applied along time at full integration resolution.
    pub filter: Option<FilterSpec>,
}

impl MapRequest {
    pub fn new(mode: MapMode, prep: Prep, post: Post) -> Self {
        Self { mode, prep, post, t_step: 0.01, eps: DEFAULT_EPS, filter: None }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.prep, self.post) {
            (MapMode::PreOnly, _, Post::None) => {}
            (MapMode::PreOnly, _, _) => {
                return Err(Error::config("pre_only maps take no post-selection"));
            }
            (_, _, Post::None) => {
                return Err(Error::config(format!("{} maps need a post-selection", self.mode.name())));
            }
            (MapMode::PostOnly, Prep::MaximallyMixed, _) => {}
            (MapMode::PostOnly, _, _) => {
                return Err(Error::config("post_only maps require the maximally mixed preparation"));
            }
            _ => {}
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("denominator guard eps must be positive"));
        }
        if !(self.t_step > 0.0) {
            return Err(Error::config("t_step must be positive"));
        }
        Ok(())
    }
}

/// Values over a (time × Rabi frequency) grid, indexed `[time][rabi]`.
///
/// Cells where conditioning was singular hold `None`.
#[derive(Debug, Clone)]
pub struct ConditionalMap {
    pub times: Vec<f64>,
    pub rabi_freqs: Vec<f64>,
    pub values: Vec<Vec<Option<Complex>>>,
    pub mode: MapMode,
    pub prep: Prep,
    pub post: Post,
    pub denominators: Option<Vec<Vec<f64>>>,
    pub filter: Option<FilterSpec>,
}

impl ConditionalMap {
    pub fn value(&self, it: usize, inu: usize) -> Option<Complex> {
        self.values[it][inu]
    }

    /// Cell with the largest `|Re value|`: `(re, t, nu)`.
    pub fn extremum(&self) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (it, row) in self.values.iter().enumerate() {
            for (inu, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    if best.map_or(true, |b| v.re.abs() > b.0.abs()) {
                        best = Some((v.re, self.times[it], self.rabi_freqs[inu]));
                    }
                }
            }
        }
        best
    }

    pub fn missing_cells(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_none()).count()
    }

    /// Index of `t` on the time axis, if it lies on the grid within 1e−9 μs.
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&x| (x - t).abs() < 1e-9)
    }
}

/// Evenly spaced grid `start, start+step, …, stop` (inclusive within 1e−9).
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::config(format!("bad grid [{start}, {stop}] step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

struct Column {
    values: Vec<Option<Complex>>,
    denominators: Vec<f64>,
}

fn build_column(cfg: &ModelConfig, req: &MapRequest, stride: usize) -> Result<Column> {
    let need_forward = matches!(req.mode, MapMode::PreOnly | MapMode::PreAndPost | MapMode::HermitianXw);
    let need_backward = req.mode.is_conditioned();
    let forward = if need_forward { Some(propagate_forward(&req.prep.density(cfg), cfg)?) } else { None };
    let backward = if need_backward { Some(propagate_backward(&req.post.effect(cfg), cfg)?) } else { None };
    let n = cfg.n_steps() + 1;
    let sm = make_pauli(Pauli::Minus);
    let hx = half_sigma_x();

    let mut values = Vec::with_capacity(n);
    let mut denominators = Vec::with_capacity(n);
    for k in 0..n {
        let cell: Result<(Complex, f64)> = match req.mode {
            MapMode::PreOnly => {
                let rho = forward.as_ref().unwrap().density(k);
                Ok(((*rho.op() * sm).trace(), f64::NAN))
            }
            MapMode::PostOnly => {
                let e = backward.as_ref().unwrap().effect(k);
                post_only_expectation(&e).map(|v| (v, e.op().trace().re))
            }
            MapMode::PreAndPost => {
                let rho = forward.as_ref().unwrap().density(k);
                let e = backward.as_ref().unwrap().effect(k);
                weak_sigma_minus(&rho, &e, req.eps)
            }
            MapMode::HermitianXw => {
                let rho = forward.as_ref().unwrap().density(k);
                let e = backward.as_ref().unwrap().effect(k);
                weak_hermitian(&rho, &e, &hx, req.eps).map(|v| (v, (*rho.op() * *e.op()).trace().re))
            }
        };
        match cell {
            Ok((v, d)) => {
                values.push(Some(v));
                denominators.push(d);
            }
            Err(Error::SingularConditioning { denom }) => {
                values.push(None);
                denominators.push(denom);
            }
            Err(e) => return Err(e),
        }
    }

    if let Some(spec) = &req.filter {
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for v in &values {
            let v = v.ok_or_else(|| {
                Error::Numerical(format!("cannot filter a column with singular cells (nu_r = {})", cfg.nu_r))
            })?;
            re.push(v.re);
            im.push(v.im);
        }
        let re = lowpass_cascade(&re, cfg.dt, spec)?;
        let im = lowpass_cascade(&im, cfg.dt, spec)?;
        values = re.into_iter().zip(im).map(|(r, i)| Some(Complex::new(r, i))).collect();
    }

    Ok(Column {
        values: values.into_iter().step_by(stride).collect(),
        denominators: denominators.into_iter().step_by(stride).collect(),
    })
}

/// Evaluate one conditional expectation over a grid of Rabi frequencies.
///
/// Each column is one forward and/or one backward propagation at that
/// Rabi frequency; columns run in parallel and are assembled in order.
pub fn build_map(cfg_base: &ModelConfig, rabi_grid: &[f64], req: &MapRequest) -> Result<ConditionalMap> {
    if rabi_grid.is_empty() {
        return Err(Error::config("rabi grid is empty"));
    }
    req.validate()?;
    cfg_base.validate()?;
    let ratio = req.t_step / cfg_base.dt;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-6 {
        return Err(Error::config(format!(
            "t_step = {} is not a multiple of dt = {}",
            req.t_step, cfg_base.dt
        )));
    }
    let columns = rabi_grid
        .par_iter()
        .map(|&nu| build_column(&cfg_base.with_nu_r(nu), req, stride))
        .collect::<Result<Vec<_>>>()?;

    let n_t = columns[0].values.len();
    let times: Vec<f64> = (0..n_t).map(|k| (k * stride) as f64 * cfg_base.dt).collect();
    let values = (0..n_t).map(|it| columns.iter().map(|c| c.values[it]).collect()).collect();
    let denominators = req
        .mode
        .is_conditioned()
        .then(|| (0..n_t).map(|it| columns.iter().map(|c| c.denominators[it]).collect()).collect());
    Ok(ConditionalMap {
        times,
        rabi_freqs: rabi_grid.to_vec(),
        values,
        mode: req.mode,
        prep: req.prep,
        post: req.post,
        denominators,
        filter: req.filter.clone(),
    })
}

/// A 4-connected set of cells beyond the unconditional bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationRegion {
    /// `(time index, rabi index)` pairs.
    pub cells: Vec<(usize, usize)>,
    /// Signed `Re value` of largest magnitude within the region.
    pub extremum: f64,
    pub at_time: f64,
    pub at_rabi: f64,
}

/// Connected regions where `|Re value| > 0.5`, in scan order.
pub fn bound_violation_contours(map: &ConditionalMap) -> Vec<ViolationRegion> {
    let n_t = map.times.len();
    let n_nu = map.rabi_freqs.len();
    let violates = |it: usize, inu: usize| {
        map.values[it][inu].is_some_and(|v| v.re.abs() > UNCONDITIONAL_BOUND)
    };
    let mut seen = vec![vec![false; n_nu]; n_t];
    let mut regions = Vec::new();
    for it0 in 0..n_t {
        for inu0 in 0..n_nu {
            if seen[it0][inu0] || !violates(it0, inu0) {
                continue;
            }
            seen[it0][inu0] = true;
            let mut queue = VecDeque::from([(it0, inu0)]);
            let mut cells = Vec::new();
            while let Some((it, inu)) = queue.pop_front() {
                cells.push((it, inu));
                let mut push = |a: usize, b: usize| {
                    if !seen[a][b] && violates(a, b) {
                        seen[a][b] = true;
                        queue.push_back((a, b));
                    }
                };
                if it > 0 {
                    push(it - 1, inu);
                }
                if it + 1 < n_t {
                    push(it + 1, inu);
                }
                if inu > 0 {
                    push(it, inu - 1);
                }
                if inu + 1 < n_nu {
                    push(it, inu + 1);
                }
            }
            cells.sort_unstable();
            let &(bt, bn) = cells
                .iter()
                .max_by(|a, b| {
                    let va = map.values[a.0][a.1].unwrap().re.abs();
                    let vb = map.values[b.0][b.1].unwrap().re.abs();
                    va.total_cmp(&vb)
                })
                .unwrap();
            regions.push(ViolationRegion {
                extremum: map.values[bt][bn].unwrap().re,
                at_time: map.times[bt],
                at_rabi: map.rabi_freqs[bn],
                cells,
            });
        }
    }
    regions
}

impl ConditionalMap {
    /// Row of the map at time `t`, or `None` if `t` is not on the time axis.
    pub fn cut(&self, t: f64) -> Option<&[Option<Complex>]> {
        self.time_index(t).map(|it| self.values[it].as_slice())
    }
}

/// Largest `|Δ Re v / Δν|` between neighbouring Rabi frequencies where
/// both cells are present.
pub fn max_abs_slope(rabi_freqs: &[f64], values: &[Option<Complex>]) -> f64 {
    rabi_freqs
        .windows(2)
        .zip(values.windows(2))
        .filter_map(|(nu, v)| match (v[0], v[1]) {
            (Some(a), Some(b)) => Some(((b.re - a.re) / (nu[1] - nu[0])).abs()),
            _ => None,
        })
        .fold(0.0, f64::max)
}

/// Rabi frequencies where `Re v` changes sign, by linear interpolation.
pub fn zero_crossings(rabi_freqs: &[f64], values: &[Option<Complex>]) -> Vec<f64> {
    rabi_freqs
        .windows(2)
        .zip(values.windows(2))
        .filter_map(|(nu, v)| match (v[0], v[1]) {
            (Some(a), Some(b)) if a.re != 0.0 && a.re.signum() != b.re.signum() => {
                Some(nu[0] + (nu[1] - nu[0]) * a.re / (a.re - b.re))
            }
            _ => None,
        })
        .collect()
}
