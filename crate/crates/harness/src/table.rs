// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use ncqed::hamiltonians::{dispersive_quantities, resonance_frequency, ResonanceKind, ResonanceSpec};
use ncqed::modulation::{ModulationProfile, SystemParams};
use ncqed::Complex64;

use crate::error::{HarnessError, Result};

const KINDS: [ResonanceKind; 3] = [ResonanceKind::Ajc, ResonanceKind::Jc, ResonanceKind::Dce];

/// Resonance shifts ξ (units of ω) for each kind.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Shifts {
    pub ajc: f64,
    pub jc: f64,
    pub dce: f64,
}

impl Shifts {
    pub fn get(&self, kind: ResonanceKind) -> f64 {
        match kind {
            ResonanceKind::Ajc => self.ajc,
            ResonanceKind::Jc => self.jc,
            ResonanceKind::Dce => self.dce,
        }
    }

    pub fn set(&mut self, kind: ResonanceKind, xi: f64) {
        match kind {
            ResonanceKind::Ajc => self.ajc = xi,
            ResonanceKind::Jc => self.jc = xi,
            ResonanceKind::Dce => self.dce = xi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceRow {
    pub order: u32,
    pub eta_ajc: f64,
    pub eta_jc: f64,
    pub eta_dce: f64,
    /// Order-K coupling at the drive frequency η of `theta_kind`.
    pub theta_k: Complex64,
    pub delta: f64,
    pub delta_k: f64,
}

/// η_AJC, η_JC, η_DCE, θ_K, δ and δ_K for K = 1..=k_max. θ_K depends on
/// ε/η, so it is evaluated at the K-th order drive of `theta_kind`.
pub fn resonance_table(
    params: &SystemParams,
    profile: &ModulationProfile,
    shifts: &Shifts,
    theta_kind: ResonanceKind,
    k_max: u32,
) -> Result<Vec<ResonanceRow>> {
    if k_max == 0 {
        return Err(HarnessError::Config("k_max must be >= 1".into()));
    }
    (1..=k_max)
        .map(|order| {
            let eta = |kind: ResonanceKind| -> Result<f64> {
                let spec = ResonanceSpec::new(kind, order, shifts.get(kind))?;
                Ok(resonance_frequency(&spec, params, profile)?)
            };
            let spec = ResonanceSpec::new(theta_kind, order, shifts.get(theta_kind))?;
            let tuned = profile.with_eta(eta(theta_kind)?);
            let dq = dispersive_quantities(params, &tuned, &spec)?;
            Ok(ResonanceRow {
                order,
                eta_ajc: eta(KINDS[0])?,
                eta_jc: eta(KINDS[1])?,
                eta_dce: eta(KINDS[2])?,
                theta_k: if order == 1 { dq.theta } else { dq.theta_k },
                delta: dq.delta,
                delta_k: dq.delta_k,
            })
        })
        .collect()
}

pub fn write_table<W: Write>(rows: &[ResonanceRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["K", "eta_ajc", "eta_jc", "eta_dce", "theta_K_re", "theta_K_im", "delta", "delta_K"])?;
    for r in rows {
        let values = [r.eta_ajc, r.eta_jc, r.eta_dce, r.theta_k.re, r.theta_k.im, r.delta, r.delta_k];
        let mut fields = vec![r.order.to_string()];
        fields.extend(values.iter().map(|v| format!("{v:.12e}")));
        out.write_record(&fields)?;
    }
    out.flush().map_err(|e| HarnessError::io("<stdout>", e))?;
    Ok(())
}
