// SPDX-License-Identifier: Apache-2.0

use std::io::{Read, Write};
use std::path::Path;

use ncqed::dynamics::{evolve, StaticPropagator, Trajectory};
use ncqed::hamiltonians::{effective_hamiltonian, exact_generator, Frame, ResonanceKind};
use ncqed::hilbert::Atom;

use crate::config::{Experiment, HamiltonianKind};
use crate::error::{HarnessError, Result};

/// Integrates (or, for the effective Hamiltonian, propagates exactly) the
/// configured experiment.
pub fn run(exp: &Experiment) -> Result<Trajectory> {
    match exp.hamiltonian {
        HamiltonianKind::ExactLab => exact(exp, Frame::Lab),
        HamiltonianKind::ExactInteraction => exact(exp, Frame::Interaction),
        HamiltonianKind::Effective => {
            let spec = exp.spec.ok_or_else(|| HarnessError::Config("effective run needs a resonance".into()))?;
            effective(exp, spec.kind)
        }
    }
}

pub(crate) fn exact(exp: &Experiment, frame: Frame) -> Result<Trajectory> {
    let generator = exact_generator(&exp.params, &exp.profile, &exp.space, frame)?;
    Ok(evolve(&exp.space, &generator, &exp.psi0, exp.t_end, &exp.integrator)?)
}

/// The effective Hamiltonians are time independent, so the run is sampled
/// from the eigendecomposition propagator.
pub(crate) fn effective(exp: &Experiment, kind: ResonanceKind) -> Result<Trajectory> {
    let spec = exp.spec.ok_or_else(|| HarnessError::Config("effective run needs a resonance".into()))?;
    let spec = ncqed::hamiltonians::ResonanceSpec { kind, ..spec };
    let h = effective_hamiltonian(&spec, &exp.params, &exp.profile, &exp.space, exp.initial_atom())?;
    Ok(StaticPropagator::new(&h).trajectory(&exp.space, &exp.psi0, &exp.sample_times()))
}

/// Column names in output order.
pub fn csv_header(n_max: usize) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "norm_error", "n_mean", "P_g", "P_e"].iter().map(|s| s.to_string()).collect();
    for atom in [Atom::Ground, Atom::Excited] {
        cols.extend((0..=n_max).map(|m| format!("P_{}_{m}", atom.label())));
    }
    cols
}

/// Writes one row per sample. Values carry 17 significant digits, so
/// reading them back is exact.
pub fn write_csv<W: Write>(traj: &Trajectory, writer: W) -> Result<()> {
    let n_max = traj.space.n_max();
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(csv_header(n_max))?;
    for (&t, s) in traj.times.iter().zip(&traj.samples) {
        let mut row = vec![t, s.norm_error, s.n_mean, s.p_g, s.p_e];
        for atom in [Atom::Ground, Atom::Excited] {
            row.extend((0..=n_max).map(|m| s.populations.get(atom, m)));
        }
        out.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
    }
    out.flush().map_err(|e| HarnessError::io("<csv output>", e))?;
    Ok(())
}

pub fn write_csv_file(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(traj, std::io::BufWriter::new(file))
}

/// A trajectory file read back as named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_csv<R: Read>(reader: R) -> Result<CsvTable> {
    let mut input = csv::Reader::from_reader(reader);
    let header = input.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in input.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| field.parse::<f64>().map_err(|e| HarnessError::Config(format!("bad csv value '{field}': {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}
