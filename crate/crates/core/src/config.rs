// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration. Every key is optional; an empty file gives the
//! reference parameters.
//!
//! ```toml
//! output_dir = "out"
//! emit_svg = true
//!
//! [model]
//! gamma1 = 0.0625
//! p_t = 0.05
//!
//! [detection]
//! bandwidth = 1.6
//!
//! [mc]
//! n_traj = 100000
//! master_seed = 7
//!
//! [grid]
//! nu_max = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::DetectionConfig;
use crate::engine::ModelConfig;
use crate::error::{Error, Result};
use crate::trajectory::McConfig;
use crate::weak::{linear_grid, Prep};

/// Time and Rabi-frequency axes of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Spacing of the stored time axis (μs).
    pub t_step: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_step: 0.01, nu_min: 0.0, nu_max: 2.0, nu_step: 0.02 }
    }
}

impl GridSpec {
    pub fn rabi_grid(&self) -> Result<Vec<f64>> {
        linear_grid(self.nu_min, self.nu_max, self.nu_step)
    }

    pub fn validate(&self, model: &ModelConfig) -> Result<()> {
        let stride = self.t_step / model.dt;
        if !(stride >= 1.0 - 1e-9) || (stride - stride.round()).abs() > 1e-6 {
            return Err(Error::config("grid t_step must be a positive multiple of model dt"));
        }
        let cells = model.t_final / self.t_step;
        if (cells - cells.round()).abs() > 1e-6 {
            return Err(Error::config("grid t_step must divide t_final"));
        }
        if self.nu_min < 0.0 {
            return Err(Error::config("grid nu_min must be non-negative"));
        }
        for nu in self.rabi_grid()? {
            model.with_nu_r(nu).validate()?;
        }
        Ok(())
    }
}

/// The `[mc]` section; the model comes from `[model]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_traj: usize,
    pub dt_sde: f64,
    pub dt_record: f64,
    pub master_seed: u64,
    pub eta: Option<f64>,
    /// Rabi frequency of the simulated experiment (MHz); defaults to the model's.
    pub nu_r: Option<f64>,
    pub prep: Prep,
}

impl Default for McSection {
    fn default() -> Self {
        let d = McConfig::new(ModelConfig::default());
        Self {
            n_traj: d.n_traj,
            dt_sde: d.dt_sde,
            dt_record: d.dt_record,
            master_seed: d.master_seed,
            eta: None,
            nu_r: None,
            prep: d.prep,
        }
    }
}

impl McSection {
    pub fn to_mc(&self, model: &ModelConfig) -> McConfig {
        let mut model = model.clone();
        if let Some(nu) = self.nu_r {
            model.nu_r = nu;
        }
        McConfig {
            model,
            n_traj: self.n_traj,
            dt_sde: self.dt_sde,
            dt_record: self.dt_record,
            master_seed: self.master_seed,
            eta: self.eta,
            prep: self.prep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub detection: DetectionConfig,
    pub mc: Option<McSection>,
    pub grid: GridSpec,
    pub output_dir: Option<PathBuf>,
    pub emit_svg: bool,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.detection.validate()?;
        self.grid.validate(&self.model)?;
        if let Some(mc) = &self.mc {
            mc.to_mc(&self.model).validate()?;
        }
        Ok(())
    }

    /// The `[mc]` section, or its defaults if absent.
    pub fn mc_config(&self) -> McConfig {
        self.mc.clone().unwrap_or_default().to_mc(&self.model)
    }
}
