// SPDX-License-Identifier: Apache-2.0

//! Config-driven front end: single runs with CSV output, exact-vs-effective
//! comparisons, resonance tables and parallel parameter sweeps.

pub mod compare;
pub mod config;
pub mod error;
pub mod run;
pub mod sweep;
pub mod table;

pub use compare::{compare, ComparisonReport};
pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use run::run;
pub use sweep::{sweep, GridConfig, SweepResult};
pub use table::resonance_table;
