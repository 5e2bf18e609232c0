// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::io::Write;

use ncqed::dynamics::{population_distance, StaticPropagator, Trajectory};
use ncqed::hamiltonians::{effective_hamiltonian, Frame, ResonanceKind, ResonanceSpec};

use crate::config::Experiment;
use crate::error::{HarnessError, Result};
use crate::run::exact;

/// Population distance beyond which the effective description is taken to
/// have broken down.
pub const VALIDITY_THRESHOLD: f64 = 0.1;

const RMS_OBSERVABLES: [&str; 3] = ["n_mean", "P_g", "P_e"];

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub kind: ResonanceKind,
    pub times: Vec<f64>,
    /// L∞ distance between the population tables at each time.
    pub distances: Vec<f64>,
    pub sup_distance: f64,
    /// (observable, RMS difference) pairs.
    pub rms: Vec<(String, f64)>,
    /// First time the distance exceeds [`VALIDITY_THRESHOLD`], if it does.
    pub validity_horizon: Option<f64>,
    pub exact: Trajectory,
    pub effective: Trajectory,
}

impl ComparisonReport {
    pub fn rms_of(&self, observable: &str) -> Option<f64> {
        self.rms.iter().find(|(name, _)| name == observable).map(|&(_, v)| v)
    }

    /// Largest distance up to and including time `t`.
    pub fn sup_until(&self, t: f64) -> f64 {
        self.times.iter().zip(&self.distances).filter(|(&s, _)| s <= t).map(|(_, &d)| d).fold(0.0, f64::max)
    }

    /// Per-time distances next to the main observables of both runs.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["t", "distance", "n_mean_exact", "n_mean_effective", "P_e_exact", "P_e_effective"])?;
        for (i, &t) in self.times.iter().enumerate() {
            let (a, b) = (&self.exact.samples[i], &self.effective.samples[i]);
            let row = [t, self.distances[i], a.n_mean, b.n_mean, a.p_e, b.p_e];
            out.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        out.flush().map_err(|e| HarnessError::io("<csv output>", e))?;
        Ok(())
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "effective: {}", self.kind)?;
        writeln!(f, "sup_distance: {:.6e}", self.sup_distance)?;
        for (name, v) in &self.rms {
            writeln!(f, "rms_{name}: {v:.6e}")?;
        }
        match self.validity_horizon {
            Some(t) => write!(f, "validity_horizon: {t:.6e} (threshold {VALIDITY_THRESHOLD})"),
            None => write!(f, "validity_horizon: none (distance stays below {VALIDITY_THRESHOLD})"),
        }
    }
}

/// Runs the exact interaction-picture dynamics and the effective
/// Hamiltonian of `kind` from the same state and compares their populations.
pub fn compare(exp: &Experiment, kind: ResonanceKind) -> Result<ComparisonReport> {
    let spec = exp
        .spec
        .ok_or_else(|| HarnessError::Config("compare needs a [resonance] section".into()))?;
    let exact = exact(exp, Frame::Interaction)?;
    let h = effective_hamiltonian(&ResonanceSpec { kind, ..spec }, &exp.params, &exp.profile, &exp.space, exp.initial_atom())?;
    let effective = StaticPropagator::new(&h).trajectory(&exp.space, &exp.psi0, &exact.times);

    let distances = population_distance(&exact, &effective);
    let sup_distance = distances.iter().copied().fold(0.0, f64::max);
    let validity_horizon = exact.times.iter().zip(&distances).find(|(_, &d)| d > VALIDITY_THRESHOLD).map(|(&t, _)| t);
    let rms = RMS_OBSERVABLES
        .iter()
        .map(|&name| {
            let (a, b) = (exact.series(name)?, effective.series(name)?);
            let mean_sq = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
            Ok((name.to_string(), mean_sq.sqrt()))
        })
        .collect::<ncqed::Result<Vec<_>>>()?;

    Ok(ComparisonReport {
        kind,
        times: exact.times.clone(),
        distances,
        sup_distance,
        rms,
        validity_horizon,
        exact,
        effective,
    })
}
