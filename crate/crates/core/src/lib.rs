// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! Conditional (pre- and post-selected) averages of the resonance
//! fluorescence of a driven, decaying qubit.
//!
//! - [`algebra`]: 2×2 operators, density matrices and effects.
//! - [`engine`]: forward state and backward effect propagation.
//! - [`superop`]: Liouvillian matrices and an `exp(L·t)` oracle.
//! - [`weak`]: weak values and conditional maps over (t, ν_R).
//! - [`detection`]: field offset, calibration and detector bandwidth.
//! - [`trajectory`]: Monte Carlo of heterodyne records with post-selection.
//! - [`oracle`]: self-checks of the deterministic engine.
//! - [`config`], [`output`], [`cli`]: the command-line front end.

pub mod algebra;
pub mod cli;
pub mod config;
pub mod detection;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod output;
pub mod superop;
pub mod trajectory;
pub mod weak;

pub use algebra::{Complex, DensityMatrix, Effect, Operator2, Pauli};
pub use engine::{Direction, ModelConfig, StateTrace};
pub use error::{Error, Result};
pub use weak::{ConditionalMap, MapMode, MapRequest, Post, Prep};
