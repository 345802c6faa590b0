// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// `Tr(ρE)` at or below the guard: past and future knowledge are
    /// mutually exclusive.
    #[error("singular conditioning: Tr(rho E) = {denom:e}")]
    SingularConditioning { denom: f64 },
    #[error("no trajectory passed the selection")]
    EmptySelection,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
