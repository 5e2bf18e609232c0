// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration files (TOML). Unknown keys are rejected.
//!
//! ```toml
//! hamiltonian = "exact_interaction"   # exact_lab | exact_interaction | effective
//! initial_state = "g,0"               # or a list of amplitudes, [re, im] or re
//! n_max = 30
//! t_end = 20000.0
//!
//! [system]
//! Omega0_over_omega = 1.4
//! g0_over_omega = 0.02
//!
//! [modulation]
//! epsilon_over_omega = 0.4
//! s = [1.0]
//! c = [0.0]
//! target = "atom"                     # atom | coupling
//!
//! [resonance]                         # or modulation.eta_over_omega
//! kind = "dce"
//! K = 1
//! xi_in_delta_units = 1.0             # or xi_over_omega
//! ```

use std::path::{Path, PathBuf};

use ncqed::dynamics::{IntegratorConfig, Method};
use ncqed::hamiltonians::{dispersive_quantities, resonance_frequency, Frame, ResonanceKind, ResonanceSpec};
use ncqed::hilbert::{Atom, QuantumState, Space};
use ncqed::modulation::{DecoherenceRates, ModulationProfile, SystemParams, Target};
use ncqed::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Number of samples recorded when the config sets no sampling.
pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub modulation: ModulationSection,
    pub resonance: Option<ResonanceSection>,
    #[serde(default)]
    pub hamiltonian: HamiltonianKind,
    pub initial_state: InitialState,
    pub n_max: usize,
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Reference unit; only 1.0 is accepted.
    pub omega: Option<f64>,
    #[serde(rename = "Omega0_over_omega")]
    pub omega0_over_omega: f64,
    pub g0_over_omega: f64,
    pub kappa_over_omega: Option<f64>,
    pub gamma_over_omega: Option<f64>,
    pub gamma_ph_over_omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub epsilon_over_omega: f64,
    pub eta_over_omega: Option<f64>,
    #[serde(default = "pure_sine")]
    pub s: Vec<f64>,
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default)]
    pub target: TargetKey,
}

fn pure_sine() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKey {
    #[default]
    Atom,
    Coupling,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSection {
    pub kind: String,
    #[serde(rename = "K", default = "first_order")]
    pub order: u32,
    pub xi_over_omega: Option<f64>,
    pub xi_in_delta_units: Option<f64>,
}

fn first_order() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    ExactLab,
    #[default]
    ExactInteraction,
    Effective,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum InitialState {
    Label(String),
    Amplitudes(Vec<Amplitude>),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Option<MethodKey>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_step: Option<f64>,
    pub sample_stride: Option<usize>,
    pub sample_interval: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKey {
    Adaptive,
    Rk4,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    pub csv: Option<PathBuf>,
}

/// A validated configuration with every derived quantity resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub params: SystemParams,
    /// Profile with η fixed, either explicitly or from the resonance.
    pub profile: ModulationProfile,
    pub spec: Option<ResonanceSpec>,
    pub hamiltonian: HamiltonianKind,
    pub space: Space,
    pub psi0: QuantumState,
    pub t_end: f64,
    pub integrator: IntegratorConfig,
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text).map_err(|e| HarnessError::ConfigFile { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn resolve(&self) -> Result<Experiment> {
        let params = self.system.params()?;
        let target = match self.modulation.target {
            TargetKey::Atom => Target::AtomFrequency,
            TargetKey::Coupling => Target::Coupling,
        };
        let m = &self.modulation;
        let provisional = |eta: f64| ModulationProfile::new(m.epsilon_over_omega, eta, m.s.clone(), m.c.clone(), target);

        let (profile, spec) = match (&self.resonance, m.eta_over_omega) {
            (Some(_), Some(_)) => {
                return Err(config("give either modulation.eta_over_omega or a [resonance] section, not both"))
            }
            (None, None) => return Err(config("missing modulation.eta_over_omega or [resonance] section")),
            (None, Some(eta)) => (provisional(eta)?, None),
            (Some(r), None) => {
                let spec = r.spec(&params, &provisional(1.0)?)?;
                let eta = resonance_frequency(&spec, &params, &provisional(1.0)?)?;
                if spec.xi.abs() / eta > 0.1 {
                    log::warn!("|xi|/eta = {:.3} is not small", spec.xi.abs() / eta);
                }
                (provisional(eta)?, Some(spec))
            }
        };
        profile.check_small_amplitude(&params);

        if self.hamiltonian == HamiltonianKind::Effective && spec.is_none() {
            return Err(config("hamiltonian = \"effective\" needs a [resonance] section"));
        }
        let space = Space::new(self.n_max)?;
        let psi0 = self.initial_state.build(&space)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(config(format!("t_end must be positive (got {})", self.t_end)));
        }
        let frame = match self.hamiltonian {
            HamiltonianKind::ExactLab => Frame::Lab,
            _ => Frame::Interaction,
        };
        let integrator = self.integrator.build(profile.eta, frame, self.t_end)?;
        Ok(Experiment {
            params,
            profile,
            spec,
            hamiltonian: self.hamiltonian,
            space,
            psi0,
            t_end: self.t_end,
            integrator,
            csv: self.outputs.csv.clone(),
        })
    }
}

fn config(message: impl Into<String>) -> HarnessError {
    HarnessError::Config(message.into())
}

impl SystemSection {
    fn params(&self) -> Result<SystemParams> {
        if let Some(omega) = self.omega {
            if omega != 1.0 {
                return Err(config(format!("system.omega is the unit of frequency and must be 1.0 (got {omega})")));
            }
        }
        let params = SystemParams::new(self.omega0_over_omega, self.g0_over_omega)?;
        match (self.kappa_over_omega, self.gamma_over_omega, self.gamma_ph_over_omega) {
            (None, None, None) => Ok(params),
            (Some(kappa), Some(gamma), Some(gamma_ph)) => {
                Ok(params.with_rates(DecoherenceRates { kappa, gamma, gamma_ph })?)
            }
            _ => Err(config("give all of kappa_over_omega, gamma_over_omega, gamma_ph_over_omega or none")),
        }
    }
}

impl ResonanceSection {
    fn spec(&self, params: &SystemParams, profile: &ModulationProfile) -> Result<ResonanceSpec> {
        let kind: ResonanceKind = self.kind.parse()?;
        let unshifted = ResonanceSpec::new(kind, self.order, 0.0)?;
        let xi = match (self.xi_over_omega, self.xi_in_delta_units) {
            (Some(_), Some(_)) => return Err(config("give either xi_over_omega or xi_in_delta_units, not both")),
            (Some(xi), None) => xi,
            (None, Some(units)) => {
                // δ (or δ_K) does not depend on η.
                let (delta, _) = dispersive_quantities(params, profile, &unshifted)?.for_order(self.order);
                units * delta
            }
            (None, None) => 0.0,
        };
        Ok(ResonanceSpec { xi, ..unshifted })
    }
}

impl InitialState {
    pub fn build(&self, space: &Space) -> Result<QuantumState> {
        match self {
            InitialState::Label(label) => {
                let (atom, m) = parse_label(label)?;
                if m > space.n_max() {
                    return Err(config(format!("initial state '{label}' exceeds n_max = {}", space.n_max())));
                }
                Ok(QuantumState::basis(space, atom, m)?)
            }
            InitialState::Amplitudes(list) => {
                if list.len() != space.dim() {
                    return Err(config(format!(
                        "initial_state has {} amplitudes, expected 2·(n_max+1) = {}",
                        list.len(),
                        space.dim()
                    )));
                }
                let amps = list
                    .iter()
                    .map(|a| match *a {
                        Amplitude::Real(re) => Complex64::new(re, 0.0),
                        Amplitude::Complex([re, im]) => Complex64::new(re, im),
                    })
                    .collect();
                Ok(QuantumState::from_amplitudes(space, amps)?)
            }
        }
    }
}

/// Parses labels such as `g,0`, `e,1` or `|g,2>`.
pub fn parse_label(label: &str) -> Result<(Atom, usize)> {
    let bad = || config(format!("cannot parse initial state '{label}' (expected e.g. \"g,0\")"));
    let trimmed = label.trim().trim_start_matches('|').trim_end_matches(['>', '⟩']);
    let (atom, m) = trimmed.split_once(',').ok_or_else(bad)?;
    let atom = match atom.trim() {
        "g" => Atom::Ground,
        "e" => Atom::Excited,
        _ => return Err(bad()),
    };
    Ok((atom, m.trim().parse().map_err(|_| bad())?))
}

impl IntegratorSection {
    fn build(&self, eta: f64, frame: Frame, t_end: f64) -> Result<IntegratorConfig> {
        let mut cfg = IntegratorConfig::for_frame(eta, frame);
        if let Some(method) = self.method {
            cfg.method = match method {
                MethodKey::Adaptive => Method::Adaptive,
                MethodKey::Rk4 => Method::FixedRk4,
            };
        }
        cfg.rel_tol = self.rel_tol.unwrap_or(cfg.rel_tol);
        cfg.abs_tol = self.abs_tol.unwrap_or(cfg.abs_tol);
        cfg.max_step = self.max_step.unwrap_or(cfg.max_step);
        match (self.sample_stride, self.sample_interval) {
            (Some(_), Some(_)) => return Err(config("give either sample_stride or sample_interval, not both")),
            (Some(stride), None) => cfg.sample_stride = stride,
            (None, Some(dt)) => cfg.sample_interval = Some(dt),
            (None, None) => cfg.sample_interval = Some(t_end / DEFAULT_SAMPLES as f64),
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Experiment {
    /// Dominant atomic state of the initial condition (selects the sign of
    /// the DCE Hamiltonian).
    pub fn initial_atom(&self) -> Atom {
        let table = ncqed::hilbert::populations(&self.space, &self.psi0);
        if table.p_e() > table.p_g() {
            Atom::Excited
        } else {
            Atom::Ground
        }
    }

    /// Sample times of a run that is not integrated step by step.
    pub fn sample_times(&self) -> Vec<f64> {
        let dt = self.integrator.sample_interval.unwrap_or(self.t_end / DEFAULT_SAMPLES as f64);
        let n = (self.t_end / dt * (1.0 - 1e-12)).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        if times.last().is_some_and(|&t| t < self.t_end) {
            times.push(self.t_end);
        }
        times
    }
}
