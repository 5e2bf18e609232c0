// SPDX-License-Identifier: Apache-2.0

//! Exact and effective Hamiltonians for the modulated atom–cavity system.
//!
//! Exact Hamiltonians are time dependent and are represented as a
//! [`DrivenHamiltonian`]: a fixed part plus operators multiplied by scalar
//! time-dependent coefficients. Effective Hamiltonians are time independent
//! and are built directly in their final rotating frames; since every frame
//! used here differs from the lab frame by a diagonal unitary, joint-basis
//! populations can be compared across all of them.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Atom, Operator, Operators, Space};
use crate::modulation::{
    coupling_strength, complex_g, deltas, evaluate_f, lambda_k, phase_xi, sideband_coefficient,
    ModulationProfile, SystemParams, Target,
};

/// Relative Hermiticity tolerance every builder is checked against.
pub const HERMITIAN_TOL: f64 = 1e-12;

type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Anything that can act as H(t) on a state vector.
pub trait Generator: Sync {
    fn dim(&self) -> usize;

    /// `out = H(t)·psi`
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);

    /// Dense H(t).
    fn at(&self, t: f64) -> Operator;
}

/// Wraps a plain `t → H(t)` builder. Slower than [`DrivenHamiltonian`] since
/// it rebuilds the dense matrix on every call.
pub struct FnGenerator<F> {
    dim: usize,
    build: F,
}

impl<F: Fn(f64) -> Operator + Sync> FnGenerator<F> {
    pub fn new(dim: usize, build: F) -> Self {
        Self { dim, build }
    }
}

impl<F: Fn(f64) -> Operator + Sync> Generator for FnGenerator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        let h = (self.build)(t);
        let m = h.matrix();
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..self.dim).map(|c| m[(r, c)] * psi[c]).sum();
        }
    }

    fn at(&self, t: f64) -> Operator {
        (self.build)(t)
    }
}

#[derive(Clone)]
struct Term {
    op: Operator,
    entries: Vec<(usize, usize, C64)>,
}

impl Term {
    fn new(op: Operator) -> Self {
        let entries = op.nonzeros();
        Self { op, entries }
    }

    fn accumulate(&self, scale: C64, psi: &[C64], out: &mut [C64]) {
        for &(r, c, v) in &self.entries {
            out[r] += scale * v * psi[c];
        }
    }
}

#[derive(Clone)]
enum Drive {
    /// `c(t)·A + c(t)*·A†`
    Paired { term: Term, adjoint: Term, coeff: Coefficient },
    /// `Re c(t)·A` with A Hermitian.
    Real { term: Term, coeff: Coefficient },
}

/// H(t) = H_fixed + Σ drives. Matrix–vector products skip zero entries of
/// the stored dense operators.
#[derive(Clone)]
pub struct DrivenHamiltonian {
    dim: usize,
    fixed: Term,
    drives: Vec<Drive>,
}

impl fmt::Debug for DrivenHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DrivenHamiltonian")
            .field("dim", &self.dim)
            .field("drives", &self.drives.len())
            .finish()
    }
}

impl DrivenHamiltonian {
    pub fn constant(op: Operator) -> Self {
        Self { dim: op.dim(), fixed: Term::new(op), drives: Vec::new() }
    }

    /// Adds `c(t)·op + h.c.`.
    pub fn with_paired(mut self, op: Operator, coeff: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        let adjoint = Term::new(op.adjoint());
        self.drives.push(Drive::Paired { term: Term::new(op), adjoint, coeff: Arc::new(coeff) });
        self
    }

    /// Adds `c(t)·op` for Hermitian `op` and real `c`.
    pub fn with_real(mut self, op: Operator, coeff: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.drives.push(Drive::Real { term: Term::new(op), coeff: Arc::new(move |t| C64::from(coeff(t))) });
        self
    }
}

impl Generator for DrivenHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        self.fixed.accumulate(C64::new(1.0, 0.0), psi, out);
        for drive in &self.drives {
            match drive {
                Drive::Paired { term, adjoint, coeff } => {
                    let c = coeff(t);
                    term.accumulate(c, psi, out);
                    adjoint.accumulate(c.conj(), psi, out);
                }
                Drive::Real { term, coeff } => term.accumulate(C64::from(coeff(t).re), psi, out),
            }
        }
    }

    fn at(&self, t: f64) -> Operator {
        let mut h = self.fixed.op.clone();
        for drive in &self.drives {
            h = match drive {
                Drive::Paired { term, adjoint, coeff } => {
                    let c = coeff(t);
                    &(&h + &term.op.scale(c)) + &adjoint.op.scale(c.conj())
                }
                Drive::Real { term, coeff } => &h + &term.op.scale_real(coeff(t).re),
            };
        }
        h
    }
}

fn require_atom_target(profile: &ModulationProfile, what: &str) -> Result<()> {
    if profile.target != Target::AtomFrequency {
        return Err(Error::Unsupported(format!(
            "{what} requires atom-frequency modulation"
        )));
    }
    Ok(())
}

/// Lab-frame Rabi Hamiltonian, H = ωn + Ω(t)σ_z/2 + g₀(t)(a + a†)(σ₊ + σ₋).
/// For atom-frequency modulation g₀(t) = g₀; for coupling modulation Ω(t) = Ω₀.
pub fn rabi_generator(params: &SystemParams, profile: &ModulationProfile, space: &Space) -> DrivenHamiltonian {
    let ops = Operators::new(space);
    let field = &ops.a + &ops.a_dag;
    let atom = &ops.sigma_plus + &ops.sigma_minus;
    let dipole = &field * &atom;
    let omega = params.omega;
    let (p, q) = (params.clone(), profile.clone());
    match profile.target {
        Target::AtomFrequency => {
            let fixed = &ops.n.scale_real(omega) + &dipole.scale_real(params.g0);
            DrivenHamiltonian::constant(fixed).with_real(ops.sigma_z.scale_real(0.5), move |t| {
                p.omega0 + q.epsilon * evaluate_f(&q, t)
            })
        }
        Target::Coupling => {
            let fixed = &ops.n.scale_real(omega) + &ops.sigma_z.scale_real(0.5 * params.omega0);
            DrivenHamiltonian::constant(fixed).with_real(dipole, move |t| coupling_strength(&p, &q, t))
        }
    }
}

pub fn rabi_hamiltonian(params: &SystemParams, profile: &ModulationProfile, t: f64, space: &Space) -> Result<Operator> {
    require_atom_target(profile, "the Rabi Hamiltonian with modulated atomic frequency")?;
    Ok(rabi_generator(params, profile, space).at(t))
}

/// Interaction picture with respect to H₀(t), atom-frequency modulation:
/// H_I = g₀(e^{iΞ₋}aσ₊ + e^{iΞ₊}a†σ₊ + h.c.) with exact phase integrals.
pub fn interaction_generator(params: &SystemParams, profile: &ModulationProfile, space: &Space) -> Result<DrivenHamiltonian> {
    require_atom_target(profile, "the Ξ±-phase interaction Hamiltonian")?;
    let ops = Operators::new(space);
    let rotating = &ops.a * &ops.sigma_plus;
    let counter = &ops.a_dag * &ops.sigma_plus;
    let g0 = params.g0;
    let (p1, q1) = (params.clone(), profile.clone());
    let (p2, q2) = (params.clone(), profile.clone());
    Ok(DrivenHamiltonian::constant(Operator::zeros(space.dim()))
        .with_paired(rotating, move |t| C64::from_polar(g0, phase_xi(&p1, &q1, t).1))
        .with_paired(counter, move |t| C64::from_polar(g0, phase_xi(&p2, &q2, t).0)))
}

pub fn interaction_hamiltonian(params: &SystemParams, profile: &ModulationProfile, t: f64, space: &Space) -> Result<Operator> {
    Ok(interaction_generator(params, profile, space)?.at(t))
}

/// Interaction picture for coupling modulation:
/// H_I = g₀(t)(e^{i(Ω₀−ω)t}aσ₊ + e^{i(Ω₀+ω)t}a†σ₊ + h.c.), g₀(t) = g₀ + εf_t.
pub fn coupling_modulated_generator(params: &SystemParams, profile: &ModulationProfile, space: &Space) -> Result<DrivenHamiltonian> {
    if profile.target != Target::Coupling {
        return Err(Error::Unsupported("coupling-modulated Hamiltonian requires target = coupling".into()));
    }
    warn_if_coupling_changes_sign(params, profile);
    let ops = Operators::new(space);
    let rotating = &ops.a * &ops.sigma_plus;
    let counter = &ops.a_dag * &ops.sigma_plus;
    let detuning = params.omega0 - params.omega;
    let sum = params.omega0 + params.omega;
    let (p1, q1) = (params.clone(), profile.clone());
    let (p2, q2) = (params.clone(), profile.clone());
    Ok(DrivenHamiltonian::constant(Operator::zeros(space.dim()))
        .with_paired(rotating, move |t| C64::from_polar(coupling_strength(&p1, &q1, t), detuning * t))
        .with_paired(counter, move |t| C64::from_polar(coupling_strength(&p2, &q2, t), sum * t)))
}

pub fn coupling_modulated_hamiltonian(params: &SystemParams, profile: &ModulationProfile, t: f64, space: &Space) -> Result<Operator> {
    Ok(coupling_modulated_generator(params, profile, space)?.at(t))
}

fn warn_if_coupling_changes_sign(params: &SystemParams, profile: &ModulationProfile) {
    let period = 2.0 * PI / profile.eta;
    let samples = 256 * profile.k_max().max(1);
    let min = (0..samples)
        .map(|i| coupling_strength(params, profile, period * i as f64 / samples as f64))
        .fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        log::warn!("modulated coupling g₀ + εf_t becomes negative (min {min:.3e})");
    }
}

/// Frame used for exact integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Interaction,
}

/// Exact Hamiltonian in the requested frame for either modulation target.
pub fn exact_generator(params: &SystemParams, profile: &ModulationProfile, space: &Space, frame: Frame) -> Result<DrivenHamiltonian> {
    match (frame, profile.target) {
        (Frame::Lab, _) => Ok(rabi_generator(params, profile, space)),
        (Frame::Interaction, Target::AtomFrequency) => interaction_generator(params, profile, space),
        (Frame::Interaction, Target::Coupling) => coupling_modulated_generator(params, profile, space),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceKind {
    Ajc,
    Jc,
    Dce,
}

impl FromStr for ResonanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ajc" => Ok(Self::Ajc),
            "jc" => Ok(Self::Jc),
            "dce" => Ok(Self::Dce),
            other => Err(Error::Config(format!("unknown resonance kind '{other}' (expected ajc, jc or dce)"))),
        }
    }
}

impl fmt::Display for ResonanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ajc => "ajc",
            Self::Jc => "jc",
            Self::Dce => "dce",
        })
    }
}

/// Resonance kind, order K ≥ 1 and shift ξ (units of ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceSpec {
    pub kind: ResonanceKind,
    pub order: u32,
    pub xi: f64,
}

impl ResonanceSpec {
    pub fn new(kind: ResonanceKind, order: u32, xi: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("resonance order K must be >= 1".into()));
        }
        if !xi.is_finite() {
            return Err(Error::Config("resonance shift must be finite".into()));
        }
        Ok(Self { kind, order, xi })
    }

    pub fn first_order(kind: ResonanceKind, xi: f64) -> Self {
        Self { kind, order: 1, xi }
    }
}

/// Modulation frequency η = η_kind / K, with η_AJC = Δ₊ − ξ,
/// η_JC = |Δ₋| − ξ and η_DCE = 2ω − 2ξ. Δ± do not depend on η, so this is
/// explicit.
pub fn resonance_frequency(spec: &ResonanceSpec, params: &SystemParams, profile: &ModulationProfile) -> Result<f64> {
    let (dp, dm) = deltas(params, profile);
    let base = match spec.kind {
        ResonanceKind::Ajc => dp - spec.xi,
        ResonanceKind::Jc => {
            if dm == 0.0 {
                return Err(Error::DegenerateResonance("JC resonance needs Δ₋ ≠ 0".into()));
            }
            dm.abs() - spec.xi
        }
        ResonanceKind::Dce => 2.0 * params.omega - 2.0 * spec.xi,
    };
    let eta = base / spec.order as f64;
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::DegenerateResonance(format!("resonance yields non-positive η = {eta:.6e}")));
    }
    if spec.xi.abs() / eta > 0.1 {
        log::warn!("resonance shift |ξ|/η = {:.3} is not small", spec.xi.abs() / eta);
    }
    Ok(eta)
}

/// Dispersive shift and effective drive couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveQuantities {
    /// δ = g₀²/Δ₋
    pub delta: f64,
    /// θ = Λ₁ε/η
    pub theta: C64,
    /// Coefficient of e^{−iKηt} in the modulation expansion, truncated at power K.
    pub theta_k: C64,
    /// Coefficient of e^{+iKηt}; reduces to −θ* at K = 1. Used by the JC
    /// resonance when Δ₋ < 0.
    pub theta_k_conjugate_branch: C64,
    /// δ + g₀²/Δ₊. Leading terms only: the higher powers of ε/η that also
    /// enter the K-th order shift are not included.
    pub delta_k: f64,
    /// Complex carrier coupling g.
    pub g: C64,
}

impl DispersiveQuantities {
    /// (δ, θ) to use at the order of `spec`.
    pub fn for_order(&self, order: u32) -> (f64, C64) {
        if order == 1 {
            (self.delta, self.theta)
        } else {
            (self.delta_k, self.theta_k)
        }
    }
}

pub fn dispersive_quantities(params: &SystemParams, profile: &ModulationProfile, spec: &ResonanceSpec) -> Result<DispersiveQuantities> {
    let (dp, dm) = deltas(params, profile);
    if dm == 0.0 {
        return Err(Error::DispersiveViolation);
    }
    let k = spec.order as usize;
    let (g, theta, theta_k, theta_k_conj) = match profile.target {
        Target::AtomFrequency => (
            complex_g(params, profile),
            lambda_k(profile, 1) * profile.ratio(),
            sideband_coefficient(profile, -(k as i64), k),
            sideband_coefficient(profile, k as i64, k),
        ),
        Target::Coupling => {
            // g₀(t) = g + ε Σ_k (−kΛ_k e^{−ikηt} − kΛ_k* e^{ikηt}), g = g₀ + εc₀
            let carrier = params.g0 + profile.epsilon * profile.c_k(0);
            let side = |kk: usize| -(kk as f64) * lambda_k(profile, kk) * profile.epsilon / carrier;
            (C64::from(carrier), side(1), side(k), side(k).conj())
        }
    };
    let delta = g.norm_sqr() / dm;
    Ok(DispersiveQuantities {
        delta,
        theta,
        theta_k,
        theta_k_conjugate_branch: theta_k_conj,
        delta_k: delta + g.norm_sqr() / dp,
        g,
    })
}

/// g₀√⟨n⟩/|Δ₋|; the dispersive pictures need this to be small.
pub fn dispersive_parameter(params: &SystemParams, profile: &ModulationProfile, mean_n: f64) -> f64 {
    let (_, dm) = deltas(params, profile);
    params.g0 * mean_n.max(0.0).sqrt() / dm.abs()
}

/// Time-independent effective Hamiltonian for a resonance:
///
/// - AJC: `[ξ + δ(1+2n)]σ_z/2 + (gθ a†σ₊ + h.c.)`
/// - JC:  `[ξ + δ(1+2n)]σ_z/2 + (gθ aσ₊ + h.c.)`, with θ → −θ* and ξ → −ξ when Δ₋ < 0
/// - DCE: `(ξ + sδ)n + sδ(θ*a² + h.c.)`, s = −1 for an atom in |g⟩ and +1 in |e⟩
///
/// For K > 1, δ → δ_K and θ → θ_K.
pub fn effective_hamiltonian(
    spec: &ResonanceSpec,
    params: &SystemParams,
    profile: &ModulationProfile,
    space: &Space,
    initial_atom: Atom,
) -> Result<Operator> {
    let dq = dispersive_quantities(params, profile, spec)?;
    let (delta, theta) = dq.for_order(spec.order);
    let ops = Operators::new(space);
    let g = dq.g;
    let h = match spec.kind {
        ResonanceKind::Ajc => {
            let coupling = (&ops.a_dag * &ops.sigma_plus).scale(g * theta);
            shift_term(&ops, spec.xi, delta) + &coupling + &coupling.adjoint()
        }
        ResonanceKind::Jc => {
            let (_, dm) = deltas(params, profile);
            let (theta, xi) = if dm > 0.0 {
                (theta, spec.xi)
            } else if spec.order == 1 {
                (-theta.conj(), -spec.xi)
            } else {
                (dq.theta_k_conjugate_branch, -spec.xi)
            };
            let coupling = (&ops.a * &ops.sigma_plus).scale(g * theta);
            shift_term(&ops, xi, delta) + &coupling + &coupling.adjoint()
        }
        ResonanceKind::Dce => {
            let s = initial_atom.sigma_z();
            let a2 = &ops.a * &ops.a;
            let squeeze = a2.scale(theta.conj());
            let squeeze = &squeeze + &squeeze.adjoint();
            &ops.n.scale_real(spec.xi + s * delta) + &squeeze.scale_real(s * delta)
        }
    };
    debug_assert!(h.is_hermitian(HERMITIAN_TOL));
    Ok(h)
}

/// `[ξ + δ(1 + 2n)]σ_z/2`
fn shift_term(ops: &Operators, xi: f64, delta: f64) -> Operator {
    let level = &ops.identity.scale_real(xi + delta) + &ops.n.scale_real(2.0 * delta);
    (&level * &ops.sigma_z).scale_real(0.5)
}

/// Which stage of the DCE reduction to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DceForm {
    /// `ξn + (Δ₋+ξ)σ_z/2 + (g aσ₊ + gθ a†σ₊ + h.c.)`, before the small unitary transformations.
    Intermediate,
    /// `(ξ + δσ_z)n + δσ_z(θ*a² + h.c.) − (2δ/Δ₋)(g e^{iΔ₋t} a n σ₊ + h.c.)`, after them.
    Transformed,
}

pub fn dce_intermediate_hamiltonian(
    spec: &ResonanceSpec,
    params: &SystemParams,
    profile: &ModulationProfile,
    space: &Space,
    t: f64,
    form: DceForm,
) -> Result<Operator> {
    if spec.kind != ResonanceKind::Dce {
        return Err(Error::Unsupported("DCE reduction requested for a non-DCE resonance".into()));
    }
    let dq = dispersive_quantities(params, profile, spec)?;
    let (delta, theta) = dq.for_order(spec.order);
    let (_, dm) = deltas(params, profile);
    let ops = Operators::new(space);
    let xi = spec.xi;
    let h = match form {
        DceForm::Intermediate => {
            let coupling = &(&ops.a * &ops.sigma_plus).scale(dq.g) + &(&ops.a_dag * &ops.sigma_plus).scale(dq.g * theta);
            &(&ops.n.scale_real(xi) + &ops.sigma_z.scale_real(0.5 * (dm + xi))) + &(&coupling + &coupling.adjoint())
        }
        DceForm::Transformed => {
            let shift = &ops.identity.scale_real(xi) + &ops.sigma_z.scale_real(delta);
            let a2 = (&ops.a * &ops.a).scale(theta.conj());
            let squeeze = &(&a2 + &a2.adjoint()) * &ops.sigma_z;
            &(&(&shift * &ops.n) + &squeeze.scale_real(delta)) + &dce_correction_term(params, profile, space, t, &dq)?
        }
    };
    Ok(h)
}

/// `−(2δ/Δ₋)(g e^{iΔ₋t} a n σ₊ + h.c.)`
fn dce_correction_term(
    params: &SystemParams,
    profile: &ModulationProfile,
    space: &Space,
    t: f64,
    dq: &DispersiveQuantities,
) -> Result<Operator> {
    let (_, dm) = deltas(params, profile);
    let ops = Operators::new(space);
    let op = (&(&ops.a * &ops.n) * &ops.sigma_plus).scale(dq.g * C64::from_polar(1.0, dm * t) * (-2.0 * dq.delta / dm));
    Ok(&op + &op.adjoint())
}

/// Resonant-regime shifts ξ± = Δ₋/2 ± √2 g₀ for initial |g,0⟩ at the AJC resonance.
pub fn resonant_ajc_shifts(params: &SystemParams, profile: &ModulationProfile) -> (f64, f64) {
    let (_, dm) = deltas(params, profile);
    (dm / 2.0 + SQRT_2 * params.g0, dm / 2.0 - SQRT_2 * params.g0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::modulation::{coefficient_series, Sign};

    fn fig1b() -> (SystemParams, ModulationProfile, Space) {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let profile = ModulationProfile::pure_sine(0.2, 2.402);
        (params, profile, Space::new(6).unwrap())
    }

    #[test]
    fn resonance_frequencies() {
        let (params, profile, _) = fig1b();
        let ajc = ResonanceSpec::first_order(ResonanceKind::Ajc, -0.002);
        assert_abs_diff_eq!(resonance_frequency(&ajc, &params, &profile).unwrap(), 2.402, epsilon = 1e-14);
        let dce = ResonanceSpec::first_order(ResonanceKind::Dce, 0.001);
        assert_abs_diff_eq!(resonance_frequency(&dce, &params, &profile).unwrap(), 1.998, epsilon = 1e-14);
        let jc2 = ResonanceSpec::new(ResonanceKind::Jc, 2, 0.0).unwrap();
        assert_abs_diff_eq!(resonance_frequency(&jc2, &params, &profile).unwrap(), 0.2, epsilon = 1e-14);

        let degenerate = SystemParams::new(1.0, 0.02).unwrap();
        let jc = ResonanceSpec::first_order(ResonanceKind::Jc, 0.0);
        assert!(matches!(
            resonance_frequency(&jc, &degenerate, &profile),
            Err(Error::DegenerateResonance(_))
        ));
        assert!(ResonanceSpec::new(ResonanceKind::Ajc, 0, 0.0).is_err());
    }

    #[test]
    fn dispersive_values() {
        let (params, profile, _) = fig1b();
        let spec = ResonanceSpec::first_order(ResonanceKind::Ajc, -0.002);
        let dq = dispersive_quantities(&params, &profile, &spec).unwrap();
        assert_abs_diff_eq!(dq.delta, 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(dq.theta.re, 0.0);
        assert_abs_diff_eq!(dq.theta.im, -0.1 / 2.402, epsilon = 1e-15);
        assert_abs_diff_eq!(dq.theta.im, -0.0416320, epsilon = 1e-6);
        assert_abs_diff_eq!(dq.theta.norm(), 0.5 * 0.2 / 2.402, epsilon = 1e-16);
        assert_eq!(dq.theta_k, dq.theta);
        assert_abs_diff_eq!(dq.delta_k, 1e-3 + 0.0004 / 2.4, epsilon = 1e-15);

        let spec2 = ResonanceSpec::new(ResonanceKind::Ajc, 2, 0.0).unwrap();
        let eta2 = resonance_frequency(&spec2, &params, &profile).unwrap();
        let p2 = profile.with_eta(eta2);
        let dq2 = dispersive_quantities(&params, &p2, &spec2).unwrap();
        let x = p2.ratio();
        assert_abs_diff_eq!(dq2.theta_k.re, -x * x / 8.0, epsilon = 1e-16);
        assert_abs_diff_eq!(dq2.theta_k.im, 0.0, epsilon = 1e-16);

        let flat = profile.with_epsilon(0.0);
        let dq0 = dispersive_quantities(&params, &flat, &spec2).unwrap();
        assert_eq!(dq0.theta, C64::new(0.0, 0.0));
        assert_eq!(dq0.theta_k, C64::new(0.0, 0.0));

        let resonant = SystemParams::new(1.0, 0.02).unwrap();
        assert_eq!(
            dispersive_quantities(&resonant, &profile, &spec),
            Err(Error::DispersiveViolation)
        );
    }

    #[test]
    fn first_sideband_is_g_theta() {
        let (params, profile, _) = fig1b();
        let spec = ResonanceSpec::first_order(ResonanceKind::Ajc, -0.002);
        let dq = dispersive_quantities(&params, &profile, &spec).unwrap();
        let l1 = complex_g(&params, &profile) * sideband_coefficient(&profile, -1, 1);
        assert!((l1 - dq.g * dq.theta).norm() < 1e-8);
        // the l=1 part of the series at η = Δ₊ − ξ rotates as e^{iξt}
        let t = 17.0;
        let l0 = coefficient_series(&params, &profile, Sign::Plus, 0, t);
        let l1_full = coefficient_series(&params, &profile, Sign::Plus, 1, t) - l0;
        let (dp, _) = deltas(&params, &profile);
        let slow = dq.g * dq.theta * C64::from_polar(1.0, (dp - profile.eta) * t);
        let fast = -dq.g * dq.theta.conj() * C64::from_polar(1.0, (dp + profile.eta) * t);
        assert!((l1_full - slow - fast).norm() < 1e-12);
    }

    #[test]
    fn rabi_matrix_elements() {
        let (params, profile, space) = fig1b();
        let h = rabi_hamiltonian(&params, &profile, 0.3, &space).unwrap();
        let e0 = space.index(Atom::Excited, 0);
        let g1 = space.index(Atom::Ground, 1);
        let e1 = space.index(Atom::Excited, 1);
        let g0 = space.index(Atom::Ground, 0);
        assert_abs_diff_eq!(h.get(e0, g1).re, 0.02);
        assert_abs_diff_eq!(h.get(e1, g0).re, 0.02);
        assert!(h.is_hermitian(HERMITIAN_TOL));
        let h0 = rabi_hamiltonian(&params, &profile, 0.0, &space).unwrap();
        assert_abs_diff_eq!((&h - &h0).trace().norm(), 0.0, epsilon = 1e-14);

        let still = profile.with_epsilon(0.0);
        let a = rabi_hamiltonian(&params, &still, 0.0, &space).unwrap();
        let b = rabi_hamiltonian(&params, &still, 12.5, &space).unwrap();
        assert_eq!(a, b);
        let weak = SystemParams::new(1.4, 1e-12).unwrap();
        let h = rabi_hamiltonian(&weak, &still, 0.0, &space).unwrap();
        assert_abs_diff_eq!(h.get(g0, g0).re, -0.7, epsilon = 1e-15);
    }

    #[test]
    fn interaction_matrix_elements() {
        let (params, profile, space) = fig1b();
        let ops = Operators::new(&space);
        let h0 = interaction_hamiltonian(&params, &profile, 0.0, &space).unwrap();
        let expected = {
            let c = &(&ops.a * &ops.sigma_plus) + &(&ops.a_dag * &ops.sigma_plus);
            (&c + &c.adjoint()).scale_real(0.02)
        };
        assert_abs_diff_eq!((&h0 - &expected).max_abs(), 0.0, epsilon = 1e-15);

        let t = 4.2;
        let h = interaction_hamiltonian(&params, &profile, t, &space).unwrap();
        let (_, xm) = phase_xi(&params, &profile, t);
        let elem = h.get(space.index(Atom::Excited, 0), space.index(Atom::Ground, 1));
        assert_abs_diff_eq!((elem - C64::from_polar(0.02, xm)).norm(), 0.0, epsilon = 1e-15);
        assert!(h.is_hermitian(HERMITIAN_TOL));

        let resonant = SystemParams::new(1.0, 0.02).unwrap();
        let still = profile.with_epsilon(0.0);
        let h = interaction_hamiltonian(&resonant, &still, 1.0, &space).unwrap();
        let rot = h.get(space.index(Atom::Excited, 0), space.index(Atom::Ground, 1));
        let anti = h.get(space.index(Atom::Excited, 1), space.index(Atom::Ground, 0));
        assert_abs_diff_eq!(rot.re, 0.02);
        assert_abs_diff_eq!((anti - C64::from_polar(0.02, 2.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coupling_modulation() {
        let (params, profile, space) = fig1b();
        let coupled = ModulationProfile { target: Target::Coupling, ..profile.clone() };
        let still_c = coupled.with_epsilon(0.0);
        let still_a = profile.with_epsilon(0.0);
        for t in [0.0, 1.3, 7.7] {
            let a = coupling_modulated_hamiltonian(&params, &still_c, t, &space).unwrap();
            let b = interaction_hamiltonian(&params, &still_a, t, &space).unwrap();
            assert_abs_diff_eq!((&a - &b).max_abs(), 0.0, epsilon = 1e-15);
        }
        let t = PI / 2.0 / coupled.eta;
        let h = coupling_modulated_hamiltonian(&params, &coupled, t, &space).unwrap();
        let elem = h.get(space.index(Atom::Excited, 0), space.index(Atom::Ground, 1));
        assert_abs_diff_eq!(elem.norm(), 0.02 + 0.2, epsilon = 1e-15);
        assert!(h.is_hermitian(HERMITIAN_TOL));
        assert!(interaction_generator(&params, &coupled, &space).is_err());
        assert!(coupling_modulated_generator(&params, &profile, &space).is_err());
    }

    #[test]
    fn effective_structure() {
        let (params, profile, space) = fig1b();
        let g0 = space.index(Atom::Ground, 0);
        let e1 = space.index(Atom::Excited, 1);

        let ajc = ResonanceSpec::first_order(ResonanceKind::Ajc, -0.002);
        let h = effective_hamiltonian(&ajc, &params, &profile, &space, Atom::Ground).unwrap();
        let dq = dispersive_quantities(&params, &profile, &ajc).unwrap();
        assert_abs_diff_eq!((h.get(e1, g0) - dq.g * dq.theta).norm(), 0.0, epsilon = 1e-15);
        assert!(h.respects_pattern(|r, c| {
            let ((ar, mr), (ac, mc)) = (space.label(r), space.label(c));
            r == c || (ar != ac && (mr as i64 - mc as i64).abs() == 1 && {
                let (gm, em) = if ar == Atom::Ground { (mr, mc) } else { (mc, mr) };
                em == gm + 1
            })
        }));

        let jc_profile = profile.with_eta(0.402);
        let jc = ResonanceSpec::first_order(ResonanceKind::Jc, -0.002);
        let h = effective_hamiltonian(&jc, &params, &jc_profile, &space, Atom::Ground).unwrap();
        let dq = dispersive_quantities(&params, &jc_profile, &jc).unwrap();
        let e0 = space.index(Atom::Excited, 0);
        let g1 = space.index(Atom::Ground, 1);
        assert_abs_diff_eq!((h.get(e0, g1) - dq.g * dq.theta).norm(), 0.0, epsilon = 1e-15);
        assert!(h.respects_pattern(|r, c| {
            let ((ar, mr), (ac, mc)) = (space.label(r), space.label(c));
            r == c || (ar != ac && {
                let (gm, em) = if ar == Atom::Ground { (mr, mc) } else { (mc, mr) };
                em + 1 == gm
            })
        }));

        let dce_profile = profile.with_eta(1.998);
        let dce = ResonanceSpec::first_order(ResonanceKind::Dce, 0.001);
        let h = effective_hamiltonian(&dce, &params, &dce_profile, &space, Atom::Ground).unwrap();
        let dq = dispersive_quantities(&params, &dce_profile, &dce).unwrap();
        for m in 0..=space.n_max() {
            let i = space.index(Atom::Ground, m);
            assert_abs_diff_eq!(h.get(i, i).re, 0.0, epsilon = 1e-15);
        }
        let g2 = space.index(Atom::Ground, 2);
        assert_abs_diff_eq!((h.get(g2, g0) + dq.delta * dq.theta * SQRT_2).norm(), 0.0, epsilon = 1e-15);
        assert!(h.respects_pattern(|r, c| {
            let ((ar, mr), (ac, mc)) = (space.label(r), space.label(c));
            ar == ac && (mr as i64 - mc as i64).abs() % 2 == 0
        }));
        for h in [
            effective_hamiltonian(&dce, &params, &dce_profile, &space, Atom::Excited).unwrap(),
            effective_hamiltonian(&ajc, &params, &profile, &space, Atom::Ground).unwrap(),
        ] {
            assert!(h.is_hermitian(HERMITIAN_TOL));
        }
    }

    #[test]
    fn jc_negative_detuning_uses_conjugate_branch() {
        let params = SystemParams::new(0.6, 0.02).unwrap();
        let profile = ModulationProfile::pure_sine(0.2, 0.398);
        let space = Space::new(4).unwrap();
        let jc = ResonanceSpec::first_order(ResonanceKind::Jc, 0.002);
        let h = effective_hamiltonian(&jc, &params, &profile, &space, Atom::Ground).unwrap();
        let dq = dispersive_quantities(&params, &profile, &jc).unwrap();
        let e0 = space.index(Atom::Excited, 0);
        let g1 = space.index(Atom::Ground, 1);
        assert_abs_diff_eq!((h.get(e0, g1) + dq.g * dq.theta.conj()).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((dq.theta_k_conjugate_branch + dq.theta.conj()).norm(), 0.0, epsilon = 1e-15);
        // ξ enters with the opposite sign
        let shift = (h.get(e0, e0) - h.get(g1, g1)).re;
        assert_abs_diff_eq!(shift, -0.002 + 2.0 * dq.delta, epsilon = 1e-15);
    }

    #[test]
    fn dce_reduction_forms() {
        let params = SystemParams::new(1.4, 0.02).unwrap();
        let profile = ModulationProfile::pure_sine(0.4, 1.998);
        let space = Space::new(6).unwrap();
        let spec = ResonanceSpec::first_order(ResonanceKind::Dce, 0.001);
        let ops = Operators::new(&space);

        let h10 = dce_intermediate_hamiltonian(&spec, &params, &profile.with_epsilon(0.0), &space, 0.0, DceForm::Intermediate).unwrap();
        let g = params.g0;
        let jc = {
            let c = (&ops.a * &ops.sigma_plus).scale_real(g);
            &(&ops.n.scale_real(0.001) + &ops.sigma_z.scale_real(0.5 * 0.401)) + &(&c + &c.adjoint())
        };
        assert_abs_diff_eq!((&h10 - &jc).max_abs(), 0.0, epsilon = 1e-15);

        let t = 3.0;
        let h11 = dce_intermediate_hamiltonian(&spec, &params, &profile, &space, t, DceForm::Transformed).unwrap();
        let hdce = effective_hamiltonian(&spec, &params, &profile, &space, Atom::Ground).unwrap();
        for m in 0..=space.n_max() {
            for k in 0..=space.n_max() {
                if m == k {
                    continue;
                }
                let (i, j) = (space.index(Atom::Ground, m), space.index(Atom::Ground, k));
                assert_abs_diff_eq!((h11.get(i, j) - hdce.get(i, j)).norm(), 0.0, epsilon = 1e-15);
            }
        }
        assert!(h11.is_hermitian(HERMITIAN_TOL));

        let anp = &(&ops.a * &ops.n) * &ops.sigma_plus;
        for n in 1..=space.n_max() {
            let psi = crate::hilbert::QuantumState::basis(&space, Atom::Ground, n).unwrap();
            let out = anp.apply(&psi).unwrap();
            assert_abs_diff_eq!(out.norm_sqr().sqrt(), n as f64 * (n as f64).sqrt(), epsilon = 1e-12);
        }
        let ajc = ResonanceSpec::first_order(ResonanceKind::Ajc, 0.0);
        assert!(dce_intermediate_hamiltonian(&ajc, &params, &profile, &space, 0.0, DceForm::Intermediate).is_err());
    }

    #[test]
    fn resonant_shift_branches() {
        let params = SystemParams::new(1.004, 0.04).unwrap();
        let profile = ModulationProfile::pure_sine(0.1, 2.0);
        let (plus, minus) = resonant_ajc_shifts(&params, &profile);
        assert_abs_diff_eq!(minus, -0.0545685425, epsilon = 1e-9);
        assert_abs_diff_eq!(plus, 0.0585685425, epsilon = 1e-9);
    }
}
