// SPDX-License-Identifier: Apache-2.0

//! Parameter sweeps over any scalar config key.
//!
//! ```toml
//! jobs = 4                      # optional, defaults to available parallelism
//! max_runs = 500
//! fit_observable = "P_e"        # optional fitted-frequency column
//!
//! [grid]
//! "resonance.xi_in_delta_units" = [-4.0, -2.0, 0.0, 2.0, 4.0]
//! "modulation.epsilon_over_omega" = { start = 0.1, stop = 0.4, num = 4 }
//! ```
//!
//! Points form the Cartesian product of the axes, the last axis varying
//! fastest. Rows come back in that order whatever the worker count.

use std::io::Write;
use std::path::Path;

use ncqed::dynamics::fit_oscillation;
use rayon::prelude::*;
use serde::Deserialize;
use toml::{Table, Value};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::run;

const DEFAULT_MAX_RUNS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub jobs: Option<usize>,
    pub max_runs: Option<usize>,
    pub fit_observable: Option<String>,
    pub grid: Table,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct Range {
    start: f64,
    stop: f64,
    num: usize,
}

/// One sweep axis: a dotted config key and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<Value>,
}

impl GridConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::ConfigFile { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn axes(&self) -> Result<Vec<Axis>> {
        self.grid
            .iter()
            .map(|(key, spec)| {
                let values = match spec {
                    Value::Array(list) if !list.is_empty() => list.clone(),
                    Value::Table(_) => {
                        let r: Range = spec
                            .clone()
                            .try_into()
                            .map_err(|e| HarnessError::Config(format!("grid axis '{key}': {e}")))?;
                        linspace(&r).into_iter().map(Value::Float).collect()
                    }
                    _ => {
                        return Err(HarnessError::Config(format!(
                            "grid axis '{key}' must be a non-empty list or {{ start, stop, num }}"
                        )))
                    }
                };
                Ok(Axis { key: key.clone(), values })
            })
            .collect()
    }
}

fn linspace(r: &Range) -> Vec<f64> {
    match r.num {
        0 => Vec::new(),
        1 => vec![r.start],
        n => (0..n).map(|i| r.start + (r.stop - r.start) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Observables summarizing one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<Value>,
    /// `ok` or the error message.
    pub status: String,
    pub max_n_mean: f64,
    pub max_p_e: f64,
    pub final_n_mean: f64,
    pub final_p_e: f64,
    /// NaN when the fit fails or none was requested.
    pub fit_frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<Axis>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["index".to_string()];
        header.extend(self.axes.iter().map(|a| a.key.clone()));
        header.extend(["status", "max_n_mean", "max_P_e", "final_n_mean", "final_P_e", "fit_frequency"].map(String::from));
        out.write_record(&header)?;
        for row in &self.rows {
            let mut fields = vec![row.index.to_string()];
            fields.extend(row.values.iter().map(value_text));
            fields.push(row.status.clone());
            fields.extend(
                [row.max_n_mean, row.max_p_e, row.final_n_mean, row.final_p_e, row.fit_frequency]
                    .iter()
                    .map(|v| format!("{v:.16e}")),
            );
            out.write_record(&fields)?;
        }
        out.flush().map_err(|e| HarnessError::io("<csv output>", e))?;
        Ok(())
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Float(x) => format!("{x:.16e}"),
        other => other.to_string(),
    }
}

/// Sets `a.b.c = value` inside `table`, creating intermediate tables.
pub fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| HarnessError::Config(format!("bad grid key '{key}'")))?;
    let mut cursor = table;
    for part in parts {
        let entry = cursor.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("grid key '{key}': '{part}' is not a table")))?;
    }
    cursor.insert(leaf.to_string(), value);
    Ok(())
}

/// Runs every grid point of `grid` on top of `base` with at most `jobs`
/// simultaneous simulations.
pub fn sweep(base: &Table, grid: &GridConfig, jobs: usize) -> Result<SweepResult> {
    let axes = grid.axes()?;
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let limit = grid.max_runs.unwrap_or(DEFAULT_MAX_RUNS);
    if total > limit {
        return Err(HarnessError::Config(format!("grid has {total} points, above max_runs = {limit}")));
    }
    let points: Vec<Vec<Value>> = (0..total)
        .map(|index| {
            let mut rem = index;
            let mut values = vec![Value::Boolean(false); axes.len()];
            for (slot, axis) in values.iter_mut().zip(&axes).rev() {
                *slot = axis.values[rem % axis.values.len()].clone();
                rem /= axis.values.len();
            }
            values
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    let fit = grid.fit_observable.as_deref();
    let rows = pool.install(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(index, values)| run_point(base, &axes, index, values, fit))
            .collect::<Vec<_>>()
    });
    Ok(SweepResult { axes, rows })
}

fn run_point(base: &Table, axes: &[Axis], index: usize, values: Vec<Value>, fit: Option<&str>) -> SweepRow {
    let mut row = SweepRow {
        index,
        values: values.clone(),
        status: "ok".into(),
        max_n_mean: f64::NAN,
        max_p_e: f64::NAN,
        final_n_mean: f64::NAN,
        final_p_e: f64::NAN,
        fit_frequency: f64::NAN,
    };
    let outcome = (|| -> Result<()> {
        let mut table = base.clone();
        table.remove("outputs");
        for (axis, value) in axes.iter().zip(values) {
            set_dotted(&mut table, &axis.key, value)?;
        }
        let cfg: ExperimentConfig =
            Value::Table(table).try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        let traj = run(&cfg.resolve()?)?;
        let last = traj.samples.last().expect("a trajectory holds at least the initial sample");
        row.max_n_mean = traj.samples.iter().map(|s| s.n_mean).fold(f64::NEG_INFINITY, f64::max);
        row.max_p_e = traj.samples.iter().map(|s| s.p_e).fold(f64::NEG_INFINITY, f64::max);
        row.final_n_mean = last.n_mean;
        row.final_p_e = last.p_e;
        if let Some(name) = fit {
            match fit_oscillation(&traj, name) {
                Ok(f) => row.fit_frequency = f.frequency,
                Err(e) => log::info!("point {index}: {e}"),
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("point {index} failed: {e}");
        row.status = format!("error: {e}");
    }
    row
}
