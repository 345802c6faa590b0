/* Copyright 2026 The condfluor Developers
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef CONDFLUOR_H
#define CONDFLUOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CfMode {
  CF_MODE_PRE_ONLY = 0,
  CF_MODE_POST_ONLY = 1,
  CF_MODE_PRE_AND_POST = 2,
  CF_MODE_HERMITIAN_XW = 3,
} CfMode;

// Model parameters addressable through [`cf_model_set`] and [`cf_model_get`].
typedef enum CfParam {
  CF_PARAM_GAMMA1 = 0,
  CF_PARAM_GAMMA1B = 1,
  CF_PARAM_NU_R = 2,
  CF_PARAM_DETUNING = 3,
  CF_PARAM_T_FINAL = 4,
  CF_PARAM_DT = 5,
  CF_PARAM_P0 = 6,
  CF_PARAM_PT = 7,
  CF_PARAM_GAMMA_PHI = 8,
} CfParam;

typedef enum CfPost {
  CF_POST_NONE = 0,
  CF_POST_G = 1,
  CF_POST_E = 2,
} CfPost;

typedef enum CfPrep {
  CF_PREP_E = 0,
  CF_PREP_G = 1,
  CF_PREP_MIXED = 2,
} CfPrep;

typedef enum CfSelection {
  CF_SELECTION_NONE = 0,
  CF_SELECTION_FINAL_G = 1,
  CF_SELECTION_FINAL_E = 2,
} CfSelection;

typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_ARGUMENT = 2,
  CF_STATUS_CONFIG = 3,
  CF_STATUS_SINGULAR = 4,
  CF_STATUS_NUMERICAL = 5,
  CF_STATUS_EMPTY_SELECTION = 6,
  CF_STATUS_OUT_OF_RANGE = 7,
  CF_STATUS_BUFFER_TOO_SMALL = 8,
  CF_STATUS_INTERNAL = 9,
} CfStatus;

// Opaque map handle.
typedef struct CfMap CfMap;

// Opaque model handle.
typedef struct CfModel CfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *cf_last_error(void);

// Library version as a NUL-terminated string with static lifetime.
const char *cf_version(void);

// Allocate a model holding the reference parameters.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum CfStatus cf_model_new_default(struct CfModel **out);

// # Safety
// `model` must be null or a handle from [`cf_model_new_default`] not yet freed.
void cf_model_free(struct CfModel *model);

// Set one parameter. The new configuration is validated; on failure the
// model is left unchanged.
//
// # Safety
// `model` must be a live handle.
enum CfStatus cf_model_set(struct CfModel *model, int32_t param, double value);

// # Safety
// `model` must be a live handle and `out` writable.
enum CfStatus cf_model_get(const struct CfModel *model, int32_t param, double *out);

// `⟨σ−⟩w = Tr(ρEσ−)/Tr(ρE)` at time `t` (μs) for the model's Rabi
// frequency. `t` must lie on the integration grid.
//
// # Safety
// `model` must be a live handle; `out_re` and `out_im` writable.
enum CfStatus cf_weak_value(const struct CfModel *model,
                            double t,
                            int32_t prep,
                            int32_t post,
                            double *out_re,
                            double *out_im);

// Build a map over Rabi frequencies `nu_min, nu_min + nu_step, …, nu_max`
// with stored time spacing `t_step`. A positive `filter_bandwidth` (MHz)
// applies a first-order detection filter along time.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum CfStatus cf_map_build(const struct CfModel *model,
                           int32_t mode,
                           int32_t prep,
                           int32_t post,
                           double nu_min,
                           double nu_max,
                           double nu_step,
                           double t_step,
                           double filter_bandwidth,
                           struct CfMap **out);

// # Safety
// `map` must be a live handle; `n_t` and `n_nu` writable.
enum CfStatus cf_map_dims(const struct CfMap *map, size_t *n_t, size_t *n_nu);

// Cell `(it, inu)`: its time, Rabi frequency and value. Singular cells
// return [`CfStatus::Singular`] with the coordinates filled in.
//
// # Safety
// `map` must be a live handle; all out pointers writable.
enum CfStatus cf_map_value(const struct CfMap *map,
                           size_t it,
                           size_t inu,
                           double *t,
                           double *nu_r,
                           double *re,
                           double *im);

// # Safety
// `map` must be null or a live handle from [`cf_map_build`].
void cf_map_free(struct CfMap *map);

// Monte Carlo conditional average of the calibrated record for the
// model's Rabi frequency, with 10 ns bins. A negative `eta` selects the
// default `gamma1b / gamma1`.
//
// On entry `*n_bins` is the capacity of `mean_re` and `stderr`; on return
// it is the number of bins. If the capacity is too small nothing is
// simulated and [`CfStatus::BufferTooSmall`] is returned with the
// required size.
//
// # Safety
// `model` must be a live handle; `mean_re` and `stderr` must hold
// `*n_bins` doubles; `n_selected` writable.
enum CfStatus cf_mc_conditional_average(const struct CfModel *model,
                                        size_t n_traj,
                                        uint64_t master_seed,
                                        double eta,
                                        int32_t prep,
                                        int32_t selection,
                                        double *mean_re,
                                        double *stderr,
                                        size_t *n_bins,
                                        size_t *n_selected);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONDFLUOR_H */
