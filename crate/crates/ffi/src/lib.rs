// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! C interface to `condfluor`.
//!
//! Models and maps are opaque handles owned by the caller and released with
//! the matching `*_free`. Every function returns a [`CfStatus`]; on failure
//! [`cf_last_error`] describes the most recent error on the calling thread.
//! Enum-valued arguments (`prep` as [`CfPrep`], `post` as [`CfPost`],
//! `mode` as [`CfMode`], `selection` as [`CfSelection`], `param` as
//! [`CfParam`]) are passed as `int32_t` and range-checked.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use condfluor::detection::FilterSpec;
use condfluor::trajectory::{run_ensemble, McConfig, Selection};
use condfluor::weak::{build_map, linear_grid, weak_sigma_minus, DEFAULT_EPS};
use condfluor::engine::{propagate_backward, propagate_forward};
use condfluor::{ConditionalMap, Error, MapMode, MapRequest, ModelConfig, Post, Prep};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Singular = 4,
    Numerical = 5,
    EmptySelection = 6,
    OutOfRange = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfPrep {
    E = 0,
    G = 1,
    Mixed = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfPost {
    None = 0,
    G = 1,
    E = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfMode {
    PreOnly = 0,
    PostOnly = 1,
    PreAndPost = 2,
    HermitianXw = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfSelection {
    None = 0,
    FinalG = 1,
    FinalE = 2,
}

/// Model parameters addressable through [`cf_model_set`] and [`cf_model_get`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfParam {
    Gamma1 = 0,
    Gamma1b = 1,
    NuR = 2,
    Detuning = 3,
    TFinal = 4,
    Dt = 5,
    P0 = 6,
    PT = 7,
    GammaPhi = 8,
}

/// Opaque model handle.
pub struct CfModel {
    cfg: ModelConfig,
}

/// Opaque map handle.
pub struct CfMap {
    map: ConditionalMap,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: CfStatus, msg: impl Into<String>) -> CfStatus {
    set_error(msg);
    status
}

fn from_error(err: Error) -> CfStatus {
    let status = match &err {
        Error::Config(_) | Error::InvalidState(_) => CfStatus::Config,
        Error::SingularConditioning { .. } => CfStatus::Singular,
        Error::Numerical(_) | Error::Io(_) => CfStatus::Numerical,
        Error::EmptySelection => CfStatus::EmptySelection,
    };
    fail(status, err.to_string())
}

/// Run `f`, turning a panic into [`CfStatus::Internal`].
fn guard<F: FnOnce() -> CfStatus>(f: F) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == CfStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(CfStatus::Internal, "internal panic"),
    }
}

fn prep_of(v: i32) -> Option<Prep> {
    Some(match v {
        0 => Prep::E,
        1 => Prep::G,
        2 => Prep::MaximallyMixed,
        _ => return None,
    })
}

fn post_of(v: i32) -> Option<Post> {
    Some(match v {
        0 => Post::None,
        1 => Post::G,
        2 => Post::E,
        _ => return None,
    })
}

fn mode_of(v: i32) -> Option<MapMode> {
    Some(match v {
        0 => MapMode::PreOnly,
        1 => MapMode::PostOnly,
        2 => MapMode::PreAndPost,
        3 => MapMode::HermitianXw,
        _ => return None,
    })
}

fn selection_of(v: i32) -> Option<Selection> {
    Some(match v {
        0 => Selection::None,
        1 => Selection::FinalG,
        2 => Selection::FinalE,
        _ => return None,
    })
}

fn param_slot(cfg: &mut ModelConfig, p: i32) -> Option<&mut f64> {
    Some(match p {
        0 => &mut cfg.gamma1,
        1 => &mut cfg.gamma1b,
        2 => &mut cfg.nu_r,
        3 => &mut cfg.detuning,
        4 => &mut cfg.t_final,
        5 => &mut cfg.dt,
        6 => &mut cfg.p0,
        7 => &mut cfg.p_t,
        8 => &mut cfg.gamma_phi,
        _ => return None,
    })
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn cf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a NUL-terminated string with static lifetime.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Allocate a model holding the reference parameters.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cf_model_new_default(out: *mut *mut CfModel) -> CfStatus {
    guard(|| {
        if out.is_null() {
            return fail(CfStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(CfModel { cfg: ModelConfig::default() }));
        CfStatus::Ok
    })
}

/// # Safety
/// `model` must be null or a handle from [`cf_model_new_default`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_model_free(model: *mut CfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Set one parameter. The new configuration is validated; on failure the
/// model is left unchanged.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_model_set(model: *mut CfModel, param: i32, value: f64) -> CfStatus {
    guard(|| {
        let Some(m) = model.as_mut() else {
            return fail(CfStatus::NullPointer, "model is null");
        };
        let mut cfg = m.cfg.clone();
        let Some(slot) = param_slot(&mut cfg, param) else {
            return fail(CfStatus::InvalidArgument, format!("unknown parameter {param}"));
        };
        *slot = value;
        if let Err(e) = cfg.validate() {
            return from_error(e);
        }
        m.cfg = cfg;
        CfStatus::Ok
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_model_get(model: *const CfModel, param: i32, out: *mut f64) -> CfStatus {
    guard(|| {
        let (Some(m), false) = (model.as_ref(), out.is_null()) else {
            return fail(CfStatus::NullPointer, "null argument");
        };
        let mut cfg = m.cfg.clone();
        let Some(slot) = param_slot(&mut cfg, param) else {
            return fail(CfStatus::InvalidArgument, format!("unknown parameter {param}"));
        };
        *out = *slot;
        CfStatus::Ok
    })
}

/// `⟨σ−⟩w = Tr(ρEσ−)/Tr(ρE)` at time `t` (μs) for the model's Rabi
/// frequency. `t` must lie on the integration grid.
///
/// # Safety
/// `model` must be a live handle; `out_re` and `out_im` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_weak_value(
    model: *const CfModel,
    t: f64,
    prep: i32,
    post: i32,
    out_re: *mut f64,
    out_im: *mut f64,
) -> CfStatus {
    guard(|| {
        let (Some(m), false, false) = (model.as_ref(), out_re.is_null(), out_im.is_null()) else {
            return fail(CfStatus::NullPointer, "null argument");
        };
        let (Some(prep), Some(post)) = (prep_of(prep), post_of(post)) else {
            return fail(CfStatus::InvalidArgument, "unknown prep or post");
        };
        let cfg = &m.cfg;
        let k = t / cfg.dt;
        if !(t >= 0.0 && t <= cfg.t_final + 1e-9) || (k - k.round()).abs() > 1e-6 {
            return fail(CfStatus::OutOfRange, format!("t = {t} is not on the integration grid"));
        }
        let k = k.round() as usize;
        let result = propagate_forward(&prep.density(cfg), cfg).and_then(|f| {
            let b = propagate_backward(&post.effect(cfg), cfg)?;
            weak_sigma_minus(&f.density(k), &b.effect(k), DEFAULT_EPS)
        });
        match result {
            Ok((v, _)) => {
                *out_re = v.re;
                *out_im = v.im;
                CfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Build a map over Rabi frequencies `nu_min, nu_min + nu_step, …, nu_max`
/// with stored time spacing `t_step`. A positive `filter_bandwidth` (MHz)
/// applies a first-order detection filter along time.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_map_build(
    model: *const CfModel,
    mode: i32,
    prep: i32,
    post: i32,
    nu_min: f64,
    nu_max: f64,
    nu_step: f64,
    t_step: f64,
    filter_bandwidth: f64,
    out: *mut *mut CfMap,
) -> CfStatus {
    guard(|| {
        let (Some(m), false) = (model.as_ref(), out.is_null()) else {
            return fail(CfStatus::NullPointer, "null argument");
        };
        let (Some(mode), Some(prep), Some(post)) = (mode_of(mode), prep_of(prep), post_of(post)) else {
            return fail(CfStatus::InvalidArgument, "unknown mode, prep or post");
        };
        let mut req = MapRequest::new(mode, prep, post);
        req.t_step = t_step;
        if filter_bandwidth > 0.0 {
            req.filter = Some(FilterSpec::first_order(filter_bandwidth));
        }
        let result = linear_grid(nu_min, nu_max, nu_step).and_then(|grid| build_map(&m.cfg, &grid, &req));
        match result {
            Ok(map) => {
                *out = Box::into_raw(Box::new(CfMap { map }));
                CfStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `map` must be a live handle; `n_t` and `n_nu` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_map_dims(map: *const CfMap, n_t: *mut usize, n_nu: *mut usize) -> CfStatus {
    guard(|| {
        let (Some(m), false, false) = (map.as_ref(), n_t.is_null(), n_nu.is_null()) else {
            return fail(CfStatus::NullPointer, "null argument");
        };
        *n_t = m.map.times.len();
        *n_nu = m.map.rabi_freqs.len();
        CfStatus::Ok
    })
}

/// Cell `(it, inu)`: its time, Rabi frequency and value. Singular cells
/// return [`CfStatus::Singular`] with the coordinates filled in.
///
/// # Safety
/// `map` must be a live handle; all out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn cf_map_value(
    map: *const CfMap,
    it: usize,
    inu: usize,
    t: *mut f64,
    nu_r: *mut f64,
    re: *mut f64,
    im: *mut f64,
) -> CfStatus {
    guard(|| {
        let Some(m) = map.as_ref() else {
            return fail(CfStatus::NullPointer, "map is null");
        };
        if t.is_null() || nu_r.is_null() || re.is_null() || im.is_null() {
            return fail(CfStatus::NullPointer, "null argument");
        }
        let m = &m.map;
        if it >= m.times.len() || inu >= m.rabi_freqs.len() {
            return fail(CfStatus::OutOfRange, format!("cell ({it}, {inu}) outside the map"));
        }
        *t = m.times[it];
        *nu_r = m.rabi_freqs[inu];
        match m.value(it, inu) {
            Some(v) => {
                *re = v.re;
                *im = v.im;
                CfStatus::Ok
            }
            None => {
                *re = f64::NAN;
                *im = f64::NAN;
                fail(CfStatus::Singular, "conditioning is singular at this cell")
            }
        }
    })
}

/// # Safety
/// `map` must be null or a live handle from [`cf_map_build`].
#[no_mangle]
pub unsafe extern "C" fn cf_map_free(map: *mut CfMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Monte Carlo conditional average of the calibrated record for the
/// model's Rabi frequency, with 10 ns bins. A negative `eta` selects the
/// default `gamma1b / gamma1`.
///
/// On entry `*n_bins` is the capacity of `mean_re` and `stderr`; on return
/// it is the number of bins. If the capacity is too small nothing is
/// simulated and [`CfStatus::BufferTooSmall`] is returned with the
/// required size.
///
/// # Safety
/// `model` must be a live handle; `mean_re` and `stderr` must hold
/// `*n_bins` doubles; `n_selected` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_mc_conditional_average(
    model: *const CfModel,
    n_traj: usize,
    master_seed: u64,
    eta: f64,
    prep: i32,
    selection: i32,
    mean_re: *mut f64,
    stderr: *mut f64,
    n_bins: *mut usize,
    n_selected: *mut usize,
) -> CfStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(CfStatus::NullPointer, "model is null");
        };
        if n_bins.is_null() || n_selected.is_null() {
            return fail(CfStatus::NullPointer, "null argument");
        }
        let (Some(prep), Some(selection)) = (prep_of(prep), selection_of(selection)) else {
            return fail(CfStatus::InvalidArgument, "unknown prep or selection");
        };
        let mut mc = McConfig::new(m.cfg.clone());
        mc.n_traj = n_traj;
        mc.master_seed = master_seed;
        mc.prep = prep;
        mc.eta = (eta >= 0.0).then_some(eta);
        if let Err(e) = mc.validate() {
            return from_error(e);
        }
        let need = mc.n_bins();
        if *n_bins < need {
            *n_bins = need;
            return fail(CfStatus::BufferTooSmall, format!("need {need} bins"));
        }
        if mean_re.is_null() || stderr.is_null() {
            return fail(CfStatus::NullPointer, "null output buffer");
        }
        let avg = match run_ensemble(&mc).and_then(|s| s.average(selection)) {
            Ok(a) => a,
            Err(e) => return from_error(e),
        };
        for (k, (v, se)) in avg.mean.iter().zip(&avg.stderr).enumerate() {
            ptr::write(mean_re.add(k), v.re);
            ptr::write(stderr.add(k), *se);
        }
        *n_bins = need;
        *n_selected = avg.n_selected;
        CfStatus::Ok
    })
}
