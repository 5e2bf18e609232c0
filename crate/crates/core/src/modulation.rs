// SPDX-License-Identifier: Apache-2.0

//! Prescribed periodic modulation and the quantities derived from it.
//!
//! All frequencies are in units of the cavity frequency ω, and ℏ = 1.
//! The modulated parameter is either the atomic transition frequency,
//! Ω(t) = Ω₀ + ε·f_t, or the coupling, g₀(t) = g₀ + ε·f_t, with
//!
//! ```text
//! f_t = c₀ + Σ_{k≥1} (s_k sin kηt + c_k cos kηt)
//! ```

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Longest Fourier series accepted for f_t.
pub const MAX_HARMONICS: usize = 16;

/// Which system parameter the modulation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    AtomFrequency,
    Coupling,
}

/// Optional dissipation rates, in units of ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceRates {
    /// Cavity decay.
    pub kappa: f64,
    /// Atomic decay.
    pub gamma: f64,
    /// Atomic pure dephasing.
    pub gamma_ph: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub omega: f64,
    pub omega0: f64,
    pub g0: f64,
    pub rates: Option<DecoherenceRates>,
}

impl SystemParams {
    /// Parameters in units of ω (so `omega = 1`).
    pub fn new(omega0: f64, g0: f64) -> Result<Self> {
        let params = Self { omega: 1.0, omega0, g0, rates: None };
        params.validate()?;
        Ok(params)
    }

    pub fn with_rates(mut self, rates: DecoherenceRates) -> Result<Self> {
        self.rates = Some(rates);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite (got {v})")))
            }
        };
        positive("omega", self.omega)?;
        positive("Omega0", self.omega0)?;
        // g₀ = 0 is allowed: an uncoupled atom and cavity.
        if !(self.g0 >= 0.0 && self.g0.is_finite()) {
            return Err(Error::Config(format!("g0 must be non-negative and finite (got {})", self.g0)));
        }
        if let Some(r) = self.rates {
            for (name, v) in [("kappa", r.kappa), ("gamma", r.gamma), ("gamma_ph", r.gamma_ph)] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("{name} must be non-negative (got {v})")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationProfile {
    pub epsilon: f64,
    pub eta: f64,
    /// s₁..s_Kmax
    pub s: Vec<f64>,
    /// c₀..c_Kmax
    pub c: Vec<f64>,
    pub target: Target,
}

impl ModulationProfile {
    pub fn new(epsilon: f64, eta: f64, s: Vec<f64>, c: Vec<f64>, target: Target) -> Result<Self> {
        let profile = Self { epsilon, eta, s, c, target };
        profile.validate()?;
        Ok(profile)
    }

    /// f_t = sin ηt on the atomic frequency.
    pub fn pure_sine(epsilon: f64, eta: f64) -> Self {
        Self { epsilon, eta, s: vec![1.0], c: vec![], target: Target::AtomFrequency }
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..self.clone() }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be >= 0 (got {})", self.epsilon)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be > 0 (got {})", self.eta)));
        }
        if self.s.len() > MAX_HARMONICS || self.c.len() > MAX_HARMONICS + 1 {
            return Err(Error::Config(format!(
                "at most {MAX_HARMONICS} harmonics are supported"
            )));
        }
        if self.s.iter().chain(&self.c).any(|x| !x.is_finite()) {
            return Err(Error::Config("Fourier coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Log a warning when ε is not small against Ω₀.
    pub fn check_small_amplitude(&self, params: &SystemParams) {
        if self.target == Target::AtomFrequency && self.epsilon / params.omega0 > 0.5 {
            log::warn!(
                "modulation amplitude ε/Ω₀ = {:.3} is not small",
                self.epsilon / params.omega0
            );
        }
    }

    /// Highest harmonic index with a declared coefficient.
    pub fn k_max(&self) -> usize {
        self.s.len().max(self.c.len().saturating_sub(1))
    }

    pub fn s_k(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.s.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn c_k(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    /// ε/η
    pub fn ratio(&self) -> f64 {
        self.epsilon / self.eta
    }
}

pub fn evaluate_f(profile: &ModulationProfile, t: f64) -> f64 {
    let mut f = profile.c_k(0);
    for k in 1..=profile.k_max() {
        let phase = k as f64 * profile.eta * t;
        f += profile.s_k(k) * phase.sin() + profile.c_k(k) * phase.cos();
    }
    f
}

/// Ω(t) for atom-frequency modulation, the constant Ω₀ otherwise.
pub fn atomic_frequency(params: &SystemParams, profile: &ModulationProfile, t: f64) -> f64 {
    match profile.target {
        Target::AtomFrequency => params.omega0 + profile.epsilon * evaluate_f(profile, t),
        Target::Coupling => params.omega0,
    }
}

/// g₀(t) for coupling modulation, the constant g₀ otherwise.
pub fn coupling_strength(params: &SystemParams, profile: &ModulationProfile, t: f64) -> f64 {
    match profile.target {
        Target::AtomFrequency => params.g0,
        Target::Coupling => params.g0 + profile.epsilon * evaluate_f(profile, t),
    }
}

/// Λ_k = −(c_k + i s_k)/(2k), k ≥ 1.
pub fn lambda_k(profile: &ModulationProfile, k: usize) -> C64 {
    assert!(k >= 1, "Λ_k is defined for k >= 1");
    -C64::new(profile.c_k(k), profile.s_k(k)) / (2.0 * k as f64)
}

/// (Δ₊, Δ₋) = Ω₀ + εc₀ ± ω. The εc₀ offset only exists when the atomic
/// frequency is modulated.
pub fn deltas(params: &SystemParams, profile: &ModulationProfile) -> (f64, f64) {
    let offset = match profile.target {
        Target::AtomFrequency => profile.epsilon * profile.c_k(0),
        Target::Coupling => 0.0,
    };
    let centre = params.omega0 + offset;
    (centre + params.omega, centre - params.omega)
}

/// Oscillating part of ∫₀ᵗ ε f_τ dτ (everything beyond the εc₀·t drift).
fn periodic_phase(profile: &ModulationProfile, t: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..=profile.k_max() {
        let kf = k as f64;
        let phase = kf * profile.eta * t;
        acc += profile.s_k(k) / kf * (1.0 - phase.cos()) + profile.c_k(k) / kf * phase.sin();
    }
    profile.ratio() * acc
}

/// Ξ±(t) = ∫₀ᵗ [Ω(τ) ± ω] dτ in closed form, returned as (Ξ₊, Ξ₋).
pub fn phase_xi(params: &SystemParams, profile: &ModulationProfile, t: f64) -> (f64, f64) {
    let (dp, dm) = deltas(params, profile);
    let periodic = match profile.target {
        Target::AtomFrequency => periodic_phase(profile, t),
        Target::Coupling => 0.0,
    };
    (dp * t + periodic, dm * t + periodic)
}

/// g = g₀·exp[i(ε/η) Σ s_k/k]; |g| = g₀.
pub fn complex_g(params: &SystemParams, profile: &ModulationProfile) -> C64 {
    let sum: f64 = (1..=profile.k_max()).map(|k| profile.s_k(k) / k as f64).sum();
    C64::from_polar(params.g0, profile.ratio() * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// (ε/η) Σ_k (Λ_k e^{−ikηt} − Λ_k* e^{ikηt}) at time t.
fn exponent_series_argument(profile: &ModulationProfile, t: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for k in 1..=profile.k_max() {
        let lk = lambda_k(profile, k);
        let rot = C64::from_polar(1.0, -(k as f64) * profile.eta * t);
        acc += lk * rot - lk.conj() * rot.conj();
    }
    acc * profile.ratio()
}

/// Partial sum, up to power `order`, of the expansion of g₀e^{iΞ±(t)}:
/// `g e^{iΔ±t} Σ_{l=0}^{order} X^l / l!`. Converges to g₀e^{iΞ±(t)}.
pub fn coefficient_series(
    params: &SystemParams,
    profile: &ModulationProfile,
    sign: Sign,
    order: usize,
    t: f64,
) -> C64 {
    let (dp, dm) = deltas(params, profile);
    let delta = match sign {
        Sign::Plus => dp,
        Sign::Minus => dm,
    };
    let x = exponent_series_argument(profile, t);
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for l in 1..=order {
        term = term * x / l as f64;
        sum += term;
    }
    complex_g(params, profile) * C64::from_polar(1.0, delta * t) * sum
}

/// Laurent polynomial in z = e^{iηt}, keyed by power.
type Laurent = BTreeMap<i64, C64>;

fn laurent_mul(a: &Laurent, b: &Laurent) -> Laurent {
    let mut out = Laurent::new();
    for (&pa, &ca) in a {
        for (&pb, &cb) in b {
            *out.entry(pa + pb).or_default() += ca * cb;
        }
    }
    out
}

/// Coefficient of `e^{i·power·ηt}` in `Σ_{l=0}^{order} X^l/l!`, the bracketed
/// series of g₀e^{iΞ±} with the prefactor g e^{iΔ±t} removed.
pub fn sideband_coefficient(profile: &ModulationProfile, power: i64, order: usize) -> C64 {
    let x = profile.ratio();
    let mut base = Laurent::new();
    for k in 1..=profile.k_max() {
        let lk = lambda_k(profile, k);
        *base.entry(-(k as i64)).or_default() += lk * x;
        *base.entry(k as i64).or_default() -= lk.conj() * x;
    }
    let mut term: Laurent = Laurent::from([(0, C64::new(1.0, 0.0))]);
    let mut total = term.get(&power).copied().unwrap_or_default();
    for l in 1..=order {
        term = laurent_mul(&term, &base);
        for c in term.values_mut() {
            *c /= l as f64;
        }
        total += term.get(&power).copied().unwrap_or_default();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sine(epsilon: f64, eta: f64) -> ModulationProfile {
        ModulationProfile::pure_sine(epsilon, eta)
    }

    #[test]
    fn f_values() {
        let p = sine(0.1, 2.0);
        assert_eq!(evaluate_f(&p, 0.0), 0.0);
        assert_abs_diff_eq!(evaluate_f(&p, PI / 4.0), 1.0, epsilon = 1e-15);
        let q = ModulationProfile::new(0.1, 1.0, vec![1.0], vec![0.0, 0.0, 0.5], Target::AtomFrequency)
            .unwrap();
        assert_abs_diff_eq!(evaluate_f(&q, PI), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn lambda_values() {
        let p = sine(0.1, 2.0);
        assert_eq!(lambda_k(&p, 1), C64::new(0.0, -0.5));
        assert_eq!(lambda_k(&p, 2), C64::new(0.0, 0.0));
        let q = ModulationProfile::new(0.1, 1.0, vec![], vec![0.0, 0.0, 1.0], Target::AtomFrequency)
            .unwrap();
        assert_eq!(lambda_k(&q, 2), C64::new(-0.25, 0.0));
        let r = ModulationProfile::new(0.1, 1.0, vec![1.0], vec![0.0, 1.0], Target::AtomFrequency)
            .unwrap();
        assert_eq!(lambda_k(&r, 1), C64::new(-0.5, -0.5));
    }

    #[test]
    fn delta_values() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let (dp, dm) = deltas(&params, &sine(0.2, 2.4));
        assert_abs_diff_eq!(dp, 2.4, epsilon = 1e-15);
        assert_abs_diff_eq!(dm, 0.4, epsilon = 1e-15);

        let resonant = SystemParams::new(1.0, 0.02).unwrap();
        assert_eq!(deltas(&resonant, &sine(0.0, 2.0)).1, 0.0);

        let offset =
            ModulationProfile::new(0.2, 2.4, vec![1.0], vec![0.1], Target::AtomFrequency).unwrap();
        assert_abs_diff_eq!(deltas(&params, &offset).1, 0.42, epsilon = 1e-15);
    }

    #[test]
    fn xi_without_modulation_is_linear() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let p = sine(0.0, 2.4);
        let (xp, xm) = phase_xi(&params, &p, 7.3);
        assert_eq!(xp, 2.4 * 7.3);
        assert_eq!(xm, (1.4 - 1.0) * 7.3);
    }

    #[test]
    fn xi_over_full_period() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let p = sine(0.2, 2.402);
        let period = 2.0 * PI / p.eta;
        let (_, xm) = phase_xi(&params, &p, period);
        assert_abs_diff_eq!(xm, 0.4 * period, epsilon = 1e-13);
    }

    #[test]
    fn complex_g_phase() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let g = complex_g(&params, &sine(0.4, 1.998));
        assert_abs_diff_eq!(g.norm(), 0.02, epsilon = 1e-17);
        assert_abs_diff_eq!(g.arg(), 0.4 / 1.998, epsilon = 1e-15);
        assert_abs_diff_eq!(g.arg(), 0.2002002, epsilon = 1e-7);
        let cosine = ModulationProfile::new(0.4, 2.0, vec![], vec![0.0, 1.0], Target::AtomFrequency)
            .unwrap();
        assert_eq!(complex_g(&params, &cosine), C64::new(0.02, 0.0));
    }

    #[test]
    fn series_order_zero_and_unmodulated() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let p = sine(0.2, 2.402);
        let t = 3.0;
        let z0 = coefficient_series(&params, &p, Sign::Minus, 0, t);
        let expected = complex_g(&params, &p) * C64::from_polar(1.0, 0.4 * t);
        assert_abs_diff_eq!((z0 - expected).norm(), 0.0, epsilon = 1e-16);

        let flat = sine(0.0, 2.402);
        for order in [0, 3, 10] {
            let z = coefficient_series(&params, &flat, Sign::Plus, order, t);
            let expected = C64::from_polar(0.02, 2.4 * t);
            assert_abs_diff_eq!((z - expected).norm(), 0.0, epsilon = 1e-16);
        }
    }

    #[test]
    fn series_converges_to_closed_form() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let p = sine(0.24, 2.4);
        let t = 3.0;
        let (_, xm) = phase_xi(&params, &p, t);
        let exact = C64::from_polar(params.g0, xm);
        let z = coefficient_series(&params, &p, Sign::Minus, 8, t);
        assert!((z - exact).norm() < 1e-8);
    }

    #[test]
    fn sideband_pure_sine_second_order() {
        let p = sine(0.3, 1.2);
        let x = p.ratio();
        let th2 = sideband_coefficient(&p, -2, 2);
        assert_abs_diff_eq!(th2.re, -x * x / 8.0, epsilon = 1e-16);
        assert_abs_diff_eq!(th2.im, 0.0, epsilon = 1e-16);
        let th1 = sideband_coefficient(&p, -1, 1);
        assert_eq!(th1, lambda_k(&p, 1) * x);
        assert_eq!(sideband_coefficient(&sine(0.0, 1.2), -2, 2), C64::new(0.0, 0.0));
    }

    #[test]
    fn validation() {
        assert!(ModulationProfile::new(-0.1, 1.0, vec![], vec![], Target::AtomFrequency).is_err());
        assert!(ModulationProfile::new(0.1, 0.0, vec![], vec![], Target::AtomFrequency).is_err());
        assert!(ModulationProfile::new(0.1, 1.0, vec![0.0; 17], vec![], Target::AtomFrequency).is_err());
        assert!(SystemParams::new(1.0, 0.0).is_ok());
        assert!(SystemParams::new(1.0, -0.1).is_err());
        let bad = DecoherenceRates { kappa: -1.0, gamma: 0.0, gamma_ph: 0.0 };
        assert!(SystemParams::new(1.0, 0.1).unwrap().with_rates(bad).is_err());
    }
}
