// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! From ⟨σ−⟩(t) to the measured voltage traces and back.
//!
//! The outgoing field is a qubit-independent offset minus a term
//! proportional to ⟨σ−⟩. The detection chain has a finite bandwidth,
//! modeled as a single-pole low-pass (optionally cascaded).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::Complex;
use crate::error::{Error, Result};

/// Bandwidth of the detection chain (MHz).
pub const DEFAULT_BANDWIDTH_MHZ: f64 = 1.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Qubit-independent part of the outgoing field, in units of V0.
    pub offset_re: f64,
    pub offset_im: f64,
    /// Volts per unit of Re⟨σ−⟩; one value for a whole run.
    pub scale: f64,
    /// 3 dB point of each filter stage (MHz).
    pub bandwidth: f64,
    /// Number of cascaded single-pole stages.
    pub filter_order: u32,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self { offset_re: 0.0, offset_im: 0.0, scale: 1.0, bandwidth: DEFAULT_BANDWIDTH_MHZ, filter_order: 1 }
    }
}

impl DetectionConfig {
    pub fn offset(&self) -> Complex {
        Complex::new(self.offset_re, self.offset_im)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::config("detection scale must be positive"));
        }
        self.filter().validate()
    }

    pub fn filter(&self) -> FilterSpec {
        FilterSpec { bandwidth: self.bandwidth, order: self.filter_order }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub bandwidth: f64,
    pub order: u32,
}

impl FilterSpec {
    pub fn first_order(bandwidth: f64) -> Self {
        Self { bandwidth, order: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::config("filter bandwidth must be positive"));
        }
        if self.order == 0 {
            return Err(Error::config("filter order must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub times: Vec<f64>,
    pub v_re: Vec<f64>,
    pub v_im: Vec<f64>,
    /// Bandwidth of the filter applied, if any (MHz).
    pub filtered: Option<f64>,
}

/// `v_re + i·v_im = offset − scale·⟨σ−⟩(t)`, unfiltered.
pub fn outgoing_field(times: &[f64], sigma_minus: &[Complex], det: &DetectionConfig) -> Result<SignalTrace> {
    if sigma_minus.is_empty() {
        return Err(Error::config("empty sigma_minus series"));
    }
    if times.len() != sigma_minus.len() {
        return Err(Error::config("times and sigma_minus lengths differ"));
    }
    det.validate()?;
    let offset = det.offset();
    let (v_re, v_im) = sigma_minus.iter().map(|s| offset - s * det.scale).map(|v| (v.re, v.im)).unzip();
    Ok(SignalTrace { times: times.to_vec(), v_re, v_im, filtered: None })
}

/// The normalized fluorescence signal `s− = (offset_re − v_re) / scale`.
pub fn extract_s_minus(trace: &SignalTrace, det: &DetectionConfig) -> Vec<f64> {
    trace.v_re.iter().map(|v| (det.offset_re - v) / det.scale).collect()
}

/// Apply the detection filter to both quadratures of a trace.
pub fn filter_trace(trace: &SignalTrace, dt: f64, spec: &FilterSpec) -> Result<SignalTrace> {
    Ok(SignalTrace {
        times: trace.times.clone(),
        v_re: lowpass_cascade(&trace.v_re, dt, spec)?,
        v_im: lowpass_cascade(&trace.v_im, dt, spec)?,
        filtered: Some(spec.bandwidth),
    })
}

/// First-order low-pass, `y[n+1] = y[n] + a·(x[n] − y[n])` with
/// `a = 2π·bandwidth·dt` and a quiescent start `y[0] = 0`.
pub fn lowpass(series: &[f64], dt: f64, bandwidth: f64) -> Result<Vec<f64>> {
    let a = 2.0 * PI * bandwidth * dt;
    if !(a > 0.0) || a >= 0.5 {
        return Err(Error::config(format!("lowpass needs 0 < 2*pi*bandwidth*dt < 0.5, got {a}")));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut y = 0.0;
    for &x in series {
        out.push(y);
        y += a * (x - y);
    }
    Ok(out)
}

/// `order` identical first-order stages in series.
pub fn lowpass_cascade(series: &[f64], dt: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut y = series.to_vec();
    for _ in 0..spec.order {
        y = lowpass(&y, dt, spec.bandwidth)?;
    }
    Ok(y)
}
