// SPDX-License-Identifier: Apache-2.0

//! Exact and effective dynamics of a two-level atom with a periodically
//! modulated transition frequency (or coupling) interacting with a single
//! cavity mode, in a truncated qubit ⊗ Fock space.
//!
//! Units: ω = 1 and ℏ = 1 throughout.

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod hilbert;
pub mod modulation;

pub use error::{Error, Result};
pub use num_complex::Complex64;
