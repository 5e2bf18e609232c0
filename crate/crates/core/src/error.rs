// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate resonance: {0}")]
    DegenerateResonance(String),

    #[error("dispersive regime violated: Δ₋ = 0")]
    DispersiveViolation,

    #[error("outside resonant regime: |Δ₋| = {delta_minus:.6e} must stay below 2√2·g₀ = {bound:.6e}")]
    OutsideResonantRegime { delta_minus: f64, bound: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration failed at t = {time:.6e}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("oscillation fit failed: {0}")]
    Fit(String),
}
