// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ncqed::analytics::decoherence_budget;
use ncqed::dynamics::fit_oscillation;
use ncqed::hamiltonians::{ResonanceKind, ResonanceSpec};
use ncqed_harness::config::ExperimentConfig;
use ncqed_harness::error::{HarnessError, Result};
use ncqed_harness::table::{write_table, Shifts};
use ncqed_harness::{compare, resonance_table, run, sweep, GridConfig};

#[derive(Parser)]
#[command(name = "ncqed", version, about = "Modulated qubit-cavity simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its trajectory as CSV
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output file (defaults to outputs.csv from the config, else stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fit A·sin²(νt) + B to this column and report ν on stderr
        #[arg(long)]
        fit: Option<String>,
    },
    /// Tabulate resonance frequencies and couplings for K = 1..kmax
    Resonance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        kmax: u32,
        /// Shift for one kind in units of ω, e.g. `--xi dce=0.001`
        #[arg(long, value_parser = parse_shift)]
        xi: Vec<(ResonanceKind, f64)>,
        /// Shift for one kind in units of δ, e.g. `--xi-delta jc=-2`
        #[arg(long, value_parser = parse_shift)]
        xi_delta: Vec<(ResonanceKind, f64)>,
    },
    /// Run a grid of experiments in parallel
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        /// Worker count (defaults to the grid file, else available parallelism)
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare exact dynamics with an effective Hamiltonian
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        effective: ResonanceKind,
        /// Per-time distances as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_shift(arg: &str) -> std::result::Result<(ResonanceKind, f64), String> {
    let (kind, value) = arg.split_once('=').ok_or("expected KIND=VALUE")?;
    let kind = kind.parse().map_err(|e: ncqed::Error| e.to_string())?;
    let value = value.parse().map_err(|e| format!("{e}"))?;
    Ok((kind, value))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| HarnessError::Io {
            path: p.to_path_buf(),
            source: e,
        })?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, out, fit } => {
            let exp = ExperimentConfig::load(&config)?.resolve()?;
            let traj = run(&exp)?;
            log::info!("{} samples, {} steps, max norm drift {:.3e}", traj.len(), traj.steps, traj.max_norm_error());
            ncqed_harness::run::write_csv(&traj, output(out.as_deref().or(exp.csv.as_deref()))?)?;
            if let Some(name) = fit {
                let f = fit_oscillation(&traj, &name)?;
                eprintln!(
                    "fit {name}: frequency = {:.6e}, amplitude = {:.6e}, offset = {:.6e}, residual = {:.3e}",
                    f.frequency, f.amplitude, f.offset, f.residual
                );
            }
            Ok(())
        }
        Command::Resonance { config, kmax, xi, xi_delta } => {
            let exp = ExperimentConfig::load(&config)?.resolve()?;
            let mut shifts = Shifts::default();
            let theta_kind = exp.spec.map_or(ResonanceKind::Ajc, |s| s.kind);
            if let Some(spec) = exp.spec {
                shifts.set(spec.kind, spec.xi);
            }
            for (kind, value) in xi {
                shifts.set(kind, value);
            }
            for (kind, units) in xi_delta {
                let probe = ResonanceSpec::first_order(kind, 0.0);
                let delta = ncqed::hamiltonians::dispersive_quantities(&exp.params, &exp.profile, &probe)?.delta;
                shifts.set(kind, units * delta);
            }
            let rows = resonance_table(&exp.params, &exp.profile, &shifts, theta_kind, kmax)?;
            write_table(&rows, std::io::stdout().lock())?;
            if exp.params.rates.is_some() {
                let spec = exp.spec.unwrap_or(ResonanceSpec::first_order(theta_kind, 0.0));
                let b = decoherence_budget(&exp.params, &exp.profile, &spec)?;
                eprintln!(
                    "budget: |δθ| = {:.3e}, |gθ| = {:.3e}, max loss rate = {:.3e}: {}",
                    b.rate_dce,
                    b.rate_ajc,
                    b.max_loss_rate(),
                    b.verdict
                );
            }
            Ok(())
        }
        Command::Sweep { config, grid, jobs, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| HarnessError::Io { path: config.clone(), source: e })?;
            let base: toml::Table = toml::from_str(&text)
                .map_err(|e| HarnessError::ConfigFile { path: config.clone(), message: e.to_string() })?;
            // Surface base-config mistakes before starting the pool.
            ExperimentConfig::load(&config)?;
            let grid = GridConfig::load(&grid)?;
            let jobs = jobs
                .or(grid.jobs)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let result = sweep(&base, &grid, jobs)?;
            let failed = result.rows.iter().filter(|r| r.status != "ok").count();
            if failed > 0 {
                log::warn!("{failed} of {} grid points failed", result.rows.len());
            }
            result.write_csv(output(out.as_deref())?)
        }
        Command::Compare { config, effective, out } => {
            let exp = ExperimentConfig::load(&config)?.resolve()?;
            let report = compare(&exp, effective)?;
            println!("{report}");
            match out {
                Some(path) => report.write_csv(output(Some(&path))?),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
