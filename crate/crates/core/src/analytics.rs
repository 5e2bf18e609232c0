// SPDX-License-Identifier: Apache-2.0

//! Closed-form predictions used to cross-check the exact dynamics.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;

use crate::error::{Error, Result};
use crate::hamiltonians::{dispersive_quantities, resonance_frequency, ResonanceKind, ResonanceSpec};
use crate::modulation::{deltas, evaluate_f, lambda_k, ModulationProfile, SystemParams};

/// Which of the two resonant-regime shifts ξ± drives the AJC transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Slowly-varying-amplitude solution for initial |g,0⟩ at the AJC resonance
/// in the resonant regime |Δ₋| ≪ g₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantAjcPrediction {
    pub branch: Branch,
    pub xi_plus: f64,
    pub xi_minus: f64,
    pub chi: f64,
    /// Mixing angle in (0, π/2).
    pub y: f64,
    /// 0 for ξ₋, π/2 for ξ₊.
    pub q: f64,
}

impl ResonantAjcPrediction {
    /// Shift selected by the branch.
    pub fn xi(&self) -> f64 {
        match self.branch {
            Branch::Plus => self.xi_plus,
            Branch::Minus => self.xi_minus,
        }
    }

    pub fn p_g0(&self, t: f64) -> f64 {
        (self.chi * t).cos().powi(2)
    }

    pub fn p_e1(&self, t: f64) -> f64 {
        self.p_e1_max() * (self.chi * t).sin().powi(2)
    }

    pub fn p_g2(&self, t: f64) -> f64 {
        self.p_g2_max() * (self.chi * t).sin().powi(2)
    }

    /// sin²(y + q)
    pub fn p_e1_max(&self) -> f64 {
        (self.y + self.q).sin().powi(2)
    }

    /// cos²(y − q)
    pub fn p_g2_max(&self) -> f64 {
        (self.y - self.q).cos().powi(2)
    }

    /// P_{g,0} + P_{e,1} + P_{g,2} − 1
    pub fn closure_residual(&self, t: f64) -> f64 {
        self.p_g0(t) + self.p_e1(t) + self.p_g2(t) - 1.0
    }
}

pub fn resonant_ajc_prediction(
    params: &SystemParams,
    profile: &ModulationProfile,
    branch: Branch,
) -> Result<ResonantAjcPrediction> {
    let (_, dm) = deltas(params, profile);
    let bound = 2.0 * SQRT_2 * params.g0;
    if dm.abs() >= bound {
        return Err(Error::OutsideResonantRegime { delta_minus: dm.abs(), bound });
    }
    if dm.abs() / params.g0 > 0.3 {
        log::warn!("|Δ₋|/g₀ = {:.3} is not small; resonant-regime formulas degrade", dm.abs() / params.g0);
    }
    let theta = lambda_k(profile, 1).norm() * profile.ratio();
    let y = ((bound + dm) / (bound - dm)).sqrt().atan();
    let q = match branch {
        Branch::Minus => 0.0,
        Branch::Plus => FRAC_PI_2,
    };
    Ok(ResonantAjcPrediction {
        branch,
        xi_plus: dm / 2.0 + SQRT_2 * params.g0,
        xi_minus: dm / 2.0 - SQRT_2 * params.g0,
        chi: params.g0 * theta * (y + q).sin(),
        y,
        q,
    })
}

/// ⟨n⟩ = sinh²(2|δθ|t) of the DCE Hamiltonian started from vacuum
/// (δ_K, θ_K at order K > 1).
pub fn dce_growth(params: &SystemParams, profile: &ModulationProfile, spec: &ResonanceSpec, t: f64) -> Result<f64> {
    if spec.kind != ResonanceKind::Dce {
        return Err(Error::Unsupported("DCE growth law needs a DCE resonance".into()));
    }
    let (delta, theta) = dispersive_quantities(params, profile, spec)?.for_order(spec.order);
    Ok((2.0 * (delta * theta).norm() * t).sinh().powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulledFrequency {
    /// (ω + σ_zδ) − σ_zδ(ε/Δ₋)f_t
    pub expanded: f64,
    /// ω + σ_z g₀²/(Δ₋ + εf_t); `None` where the denominator vanishes.
    pub unexpanded: Option<f64>,
    /// Δ₋ + εf_t reaches zero or changes sign during a modulation period.
    pub singular: bool,
}

/// Cavity frequency pulled by an atom in σ_z = ±1.
pub fn pulled_frequency(params: &SystemParams, profile: &ModulationProfile, t: f64, sigma_z: f64) -> Result<PulledFrequency> {
    let (_, dm) = deltas(params, profile);
    if dm == 0.0 {
        return Err(Error::DispersiveViolation);
    }
    let delta = params.g0 * params.g0 / dm;
    let f = evaluate_f(profile, t);
    let expanded = params.omega + sigma_z * delta - sigma_z * delta * profile.epsilon / dm * f;
    let denom = dm + profile.epsilon * f;
    let unexpanded = (denom.abs() > 1e-15 * dm.abs()).then(|| params.omega + sigma_z * params.g0 * params.g0 / denom);

    let samples = 512 * profile.k_max().max(1);
    let period = 2.0 * std::f64::consts::PI / profile.eta;
    let singular = (0..samples).any(|i| {
        let d = dm + profile.epsilon * evaluate_f(profile, period * i as f64 / samples as f64);
        d * dm.signum() <= 0.0
    });
    Ok(PulledFrequency { expanded, unexpanded, singular })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "feasible",
            Verdict::Infeasible => "infeasible",
        })
    }
}

/// Photon-creation rates of the DCE and AJC resonances against dissipation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceBudget {
    /// |δθ|
    pub rate_dce: f64,
    /// |gθ|
    pub rate_ajc: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_ph: f64,
    pub verdict: Verdict,
}

impl DecoherenceBudget {
    pub fn max_loss_rate(&self) -> f64 {
        self.kappa.max(self.gamma).max(self.gamma_ph)
    }

    /// (rate / κ, rate / γ, rate / γ_ph); infinite where a loss rate is zero.
    pub fn ratios(&self, rate: f64) -> [f64; 3] {
        [self.kappa, self.gamma, self.gamma_ph].map(|r| rate / r)
    }
}

/// Both creation rates are evaluated at their own resonance frequency and
/// order `spec.order`; `spec.xi` applies to the resonance of `spec.kind`,
/// the other uses ξ = 0. The verdict is feasible when both rates are
/// non-zero and no more than an order of magnitude below the largest loss
/// rate.
pub fn decoherence_budget(params: &SystemParams, profile: &ModulationProfile, spec: &ResonanceSpec) -> Result<DecoherenceBudget> {
    let rates = params
        .rates
        .ok_or_else(|| Error::Config("decoherence budget needs kappa, gamma and gamma_ph".into()))?;
    let at = |kind: ResonanceKind| -> Result<(f64, num_complex::Complex64, num_complex::Complex64)> {
        let xi = if kind == spec.kind { spec.xi } else { 0.0 };
        let s = ResonanceSpec::new(kind, spec.order, xi)?;
        let tuned = profile.with_eta(resonance_frequency(&s, params, profile)?);
        let dq = dispersive_quantities(params, &tuned, &s)?;
        let (delta, theta) = dq.for_order(spec.order);
        Ok((delta, theta, dq.g))
    };
    let (delta, theta_dce, _) = at(ResonanceKind::Dce)?;
    let (_, theta_ajc, g) = at(ResonanceKind::Ajc)?;
    let rate_dce = (delta * theta_dce).norm();
    let rate_ajc = (g * theta_ajc).norm();
    // A rate sitting exactly on the threshold counts as reaching it.
    let threshold = 0.1 * rates.kappa.max(rates.gamma).max(rates.gamma_ph) * (1.0 - 1e-12);
    let verdict = if rate_dce > 0.0 && rate_ajc > 0.0 && rate_dce >= threshold && rate_ajc >= threshold {
        Verdict::Feasible
    } else {
        Verdict::Infeasible
    };
    Ok(DecoherenceBudget {
        rate_dce,
        rate_ajc,
        kappa: rates.kappa,
        gamma: rates.gamma,
        gamma_ph: rates.gamma_ph,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::DecoherenceRates;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn symmetric_point() {
        let params = SystemParams::new(1.0, 0.04).unwrap();
        let profile = ModulationProfile::pure_sine(0.1, 2.05);
        let minus = resonant_ajc_prediction(&params, &profile, Branch::Minus).unwrap();
        assert_abs_diff_eq!(minus.y, FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(minus.p_e1_max(), 0.5, epsilon = 1e-15);
        let plus = resonant_ajc_prediction(&params, &profile, Branch::Plus).unwrap();
        assert_eq!(plus.q, FRAC_PI_2);
        assert_abs_diff_eq!(plus.p_e1_max(), 0.5, epsilon = 1e-15);
        for t in [0.0, 100.0, 1234.5, 9e3] {
            assert!(minus.closure_residual(t).abs() < 1e-12);
            assert!(plus.closure_residual(t).abs() < 1e-12);
            // swapping branches exchanges the P_{e,1} and P_{g,2} envelopes
            assert_abs_diff_eq!(minus.p_e1_max(), plus.p_g2_max(), epsilon = 1e-15);
        }
    }

    #[test]
    fn resonant_regime_values() {
        let g0 = 0.04;
        let params = SystemParams::new(1.0 + g0 / 10.0, g0).unwrap();
        let xi_minus = g0 / 20.0 - SQRT_2 * g0;
        let eta = 2.0 + g0 / 10.0 - xi_minus;
        let profile = ModulationProfile::pure_sine(0.1, eta);
        let p = resonant_ajc_prediction(&params, &profile, Branch::Minus).unwrap();
        assert_abs_diff_eq!(p.xi_minus, -0.054568542, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 0.80311, epsilon = 1e-4);
        // χ = g₀ · (ε/2η) · sin y
        let chi = g0 * 0.05 / eta * p.y.sin();
        assert_abs_diff_eq!(p.chi, chi, epsilon = 1e-18);
        assert_abs_diff_eq!(p.chi, 6.99e-4, epsilon = 1e-6);

        let far = SystemParams::new(1.2, g0).unwrap();
        assert!(matches!(
            resonant_ajc_prediction(&far, &profile, Branch::Minus),
            Err(Error::OutsideResonantRegime { .. })
        ));
    }

    #[test]
    fn dce_growth_values() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let spec = ResonanceSpec::first_order(ResonanceKind::Dce, 0.001);
        let profile = ModulationProfile::pure_sine(0.4, 1.998);
        assert_eq!(dce_growth(&params, &profile, &spec, 0.0).unwrap(), 0.0);
        let n = dce_growth(&params, &profile, &spec, 5000.0).unwrap();
        let rate: f64 = 1e-3 * 0.2 / 1.998;
        assert_abs_diff_eq!(n, (2.0 * rate * 5000.0).sinh().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(n, 1.3847, epsilon = 1e-3);
        assert_eq!(dce_growth(&params, &profile.with_epsilon(0.0), &spec, 5000.0).unwrap(), 0.0);
        // monotone and convex
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 200.0).collect();
        let ns: Vec<f64> = ts.iter().map(|&t| dce_growth(&params, &profile, &spec, t).unwrap()).collect();
        for w in ns.windows(3) {
            assert!(w[1] > w[0] && w[2] - w[1] > w[1] - w[0]);
        }
    }

    #[test]
    fn pulled_frequency_forms() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let still = ModulationProfile::pure_sine(0.0, 1.998);
        let p = pulled_frequency(&params, &still, 3.0, -1.0).unwrap();
        assert_abs_diff_eq!(p.expanded, 1.0 - 1e-3, epsilon = 1e-15);
        assert!(!p.singular);

        let fig2 = ModulationProfile::pure_sine(0.4, 1.998);
        let t = std::f64::consts::FRAC_PI_2 / fig2.eta;
        let p = pulled_frequency(&params, &fig2, t, -1.0).unwrap();
        assert_abs_diff_eq!(p.expanded, 1.0, epsilon = 1e-15);
        assert!(p.singular);

        let mild = ModulationProfile::pure_sine(0.1, 1.998);
        for i in 0..40 {
            let t = i as f64 * 0.137;
            let p = pulled_frequency(&params, &mild, t, 1.0).unwrap();
            let ratio = mild.epsilon / 0.4;
            let rel = (p.expanded - p.unexpanded.unwrap()).abs() / p.unexpanded.unwrap();
            assert!(rel < ratio * ratio);
        }
    }

    #[test]
    fn budget_reference_point() {
        let params = SystemParams::new(1.1, 0.02)
            .unwrap()
            .with_rates(DecoherenceRates { kappa: 1e-4, gamma: 1e-3, gamma_ph: 1e-3 })
            .unwrap();
        let profile = ModulationProfile::pure_sine(0.1, 2.0);
        let spec = ResonanceSpec::first_order(ResonanceKind::Dce, 0.0);
        let b = decoherence_budget(&params, &profile, &spec).unwrap();
        assert_abs_diff_eq!(b.rate_dce, 4e-3 * 0.025, epsilon = 1e-15);
        assert_abs_diff_eq!(b.rate_ajc, 0.02 * 0.05 / 2.1, epsilon = 1e-15);
        assert_eq!(b.verdict, Verdict::Feasible);

        let none = decoherence_budget(&params, &profile.with_epsilon(0.0), &spec).unwrap();
        assert_eq!(none.verdict, Verdict::Infeasible);

        let lossless = SystemParams::new(1.1, 0.02)
            .unwrap()
            .with_rates(DecoherenceRates { kappa: 0.0, gamma: 0.0, gamma_ph: 0.0 })
            .unwrap();
        assert_eq!(decoherence_budget(&lossless, &profile, &spec).unwrap().verdict, Verdict::Feasible);

        let bare = SystemParams::new(1.1, 0.02).unwrap();
        assert!(matches!(decoherence_budget(&bare, &profile, &spec), Err(Error::Config(_))));
    }
}
