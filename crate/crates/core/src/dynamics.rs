// SPDX-License-Identifier: Apache-2.0

//! Time integration of i·dψ/dt = H(t)ψ, trajectory recording, and the
//! consistency checks built on top of it (frame equivalence, Fock-space
//! truncation, oscillation fitting).
//!
//! States are never renormalized during a run: the norm drift recorded in
//! every sample is the integrator's error monitor.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hamiltonians::{exact_generator, Frame, Generator};
use crate::hilbert::{populations, Atom, Operator, Populations, QuantumState, Space};
use crate::modulation::{ModulationProfile, SystemParams};

/// Population above which a Fock tail counts as truncation leakage.
pub const TAIL_LIMIT: f64 = 1e-6;

/// Norm drift tolerated in any sample.
pub const NORM_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Classic fourth-order Runge–Kutta with step `max_step`.
    FixedRk4,
    /// Dormand–Prince 5(4) with error control.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Record a sample every `sample_stride` accepted steps.
    pub sample_stride: usize,
    /// When set, record at exact multiples of this interval instead of by stride.
    pub sample_interval: Option<f64>,
}

impl IntegratorConfig {
    /// Adaptive defaults resolving a drive at angular frequency `eta`.
    pub fn for_drive(eta: f64) -> Self {
        Self {
            method: Method::Adaptive,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 2.0 * PI / (50.0 * eta),
            sample_stride: 1,
            sample_interval: None,
        }
    }

    /// Defaults for an exact run in `frame`. The lab frame carries the fast
    /// free evolution, so it needs a tighter tolerance to keep the norm drift
    /// below [`NORM_LIMIT`] over long runs.
    pub fn for_frame(eta: f64, frame: Frame) -> Self {
        let cfg = Self::for_drive(eta);
        match frame {
            Frame::Lab => Self { rel_tol: 1e-11, abs_tol: 1e-14, ..cfg },
            Frame::Interaction => cfg,
        }
    }

    pub fn fixed_rk4(step: f64) -> Self {
        Self {
            method: Method::FixedRk4,
            max_step: step,
            ..Self::for_drive(1.0)
        }
    }

    pub fn with_interval(mut self, interval: f64) -> Self {
        self.sample_interval = Some(interval);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(tol > 0.0 && tol <= 1e-4) {
                return Err(Error::Config(format!("{name} must lie in (0, 1e-4] (got {tol})")));
            }
        }
        if !(self.max_step > 0.0 && self.max_step.is_finite()) {
            return Err(Error::Config(format!("max_step must be positive (got {})", self.max_step)));
        }
        if self.sample_stride == 0 {
            return Err(Error::Config("sample_stride must be >= 1".into()));
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("sample_interval must be positive (got {dt})")));
            }
        }
        Ok(())
    }
}

/// Observables recorded at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub populations: Populations,
    pub n_mean: f64,
    pub p_g: f64,
    pub p_e: f64,
    pub norm_error: f64,
}

impl Sample {
    pub fn of(space: &Space, psi: &QuantumState) -> Self {
        let populations = populations(space, psi);
        Self {
            n_mean: populations.mean_photon_number(),
            p_g: populations.p_g(),
            p_e: populations.p_e(),
            norm_error: (psi.norm_sqr() - 1.0).abs(),
            populations,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub space: Space,
    pub times: Vec<f64>,
    pub samples: Vec<Sample>,
    pub final_state: QuantumState,
    /// Accepted integrator steps.
    pub steps: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_norm_error(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_error).fold(0.0, f64::max)
    }

    /// Time series of a named observable: `n_mean`, `P_g`, `P_e`,
    /// `norm_error`, or a joint population such as `P_g_0`, `P_e_1`.
    pub fn series(&self, name: &str) -> Result<Vec<f64>> {
        let pick: Box<dyn Fn(&Sample) -> f64> = match name {
            "n_mean" => Box::new(|s| s.n_mean),
            "P_g" => Box::new(|s| s.p_g),
            "P_e" => Box::new(|s| s.p_e),
            "norm_error" => Box::new(|s| s.norm_error),
            other => {
                let (atom, m) = parse_population_name(other)
                    .ok_or_else(|| Error::Config(format!("unknown observable '{other}'")))?;
                if m > self.space.n_max() {
                    return Err(Error::Config(format!("observable '{other}' exceeds n_max")));
                }
                Box::new(move |s| s.populations.get(atom, m))
            }
        };
        Ok(self.samples.iter().map(pick).collect())
    }

    /// Largest value of `P(m ≥ from_m)` over the run.
    pub fn max_tail(&self, from_m: usize) -> f64 {
        self.samples.iter().map(|s| s.populations.tail(from_m)).fold(0.0, f64::max)
    }

    /// Linear interpolation of a series at time `t` (clamped to the run).
    pub fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
        match times.partition_point(|&x| x < t) {
            0 => values[0],
            i if i >= times.len() => values[times.len() - 1],
            i => {
                let (t0, t1) = (times[i - 1], times[i]);
                let w = (t - t0) / (t1 - t0);
                values[i - 1] * (1.0 - w) + values[i] * w
            }
        }
    }
}

fn parse_population_name(name: &str) -> Option<(Atom, usize)> {
    let rest = name.strip_prefix("P_")?;
    let (atom, m) = rest.split_once('_')?;
    let atom = match atom {
        "g" => Atom::Ground,
        "e" => Atom::Excited,
        _ => return None,
    };
    Some((atom, m.parse().ok()?))
}

struct Recorder<'a> {
    space: &'a Space,
    times: Vec<f64>,
    samples: Vec<Sample>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, psi: &[C64]) {
        let state = QuantumState::from_vector(DVector::from_column_slice(psi));
        let sample = Sample::of(self.space, &state);
        if sample.norm_error > NORM_LIMIT {
            log::warn!("norm drift {:.3e} at t = {t:.6e}", sample.norm_error);
        }
        self.times.push(t);
        self.samples.push(sample);
    }
}

/// Fock states at or above this index count as the truncation tail.
pub fn tail_start(space: &Space) -> usize {
    space.n_max().saturating_sub(2)
}

/// Integrate from `psi0` at t = 0 to `t_end`.
pub fn evolve(
    space: &Space,
    generator: &dyn Generator,
    psi0: &QuantumState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if generator.dim() != space.dim() || psi0.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: psi0.dim().min(generator.dim()) });
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end must be positive (got {t_end})")));
    }
    let norm_error = (psi0.norm_sqr() - 1.0).abs();
    if norm_error > NORM_LIMIT {
        return Err(Error::Config(format!("initial state is not normalized (|‖ψ‖²−1| = {norm_error:.3e})")));
    }
    let tail = populations(space, psi0).tail(tail_start(space));
    if tail > TAIL_LIMIT {
        return Err(Error::Config(format!(
            "initial state has population {tail:.3e} in Fock states m >= {}; increase n_max",
            tail_start(space)
        )));
    }
    let mut rec = Recorder { space, times: Vec::new(), samples: Vec::new() };
    let mut psi: Vec<C64> = psi0.as_slice().to_vec();
    rec.record(0.0, &psi);
    let steps = match cfg.method {
        Method::FixedRk4 => integrate_rk4(generator, &mut psi, t_end, cfg, &mut rec)?,
        Method::Adaptive => integrate_dopri5(generator, &mut psi, t_end, cfg, &mut rec)?,
    };
    Ok(Trajectory {
        space: *space,
        times: rec.times,
        samples: rec.samples,
        final_state: QuantumState::from_vector(DVector::from_vec(psi)),
        steps,
    })
}

/// dψ/dt = −iH(t)ψ
fn rhs(generator: &dyn Generator, t: f64, psi: &[C64], out: &mut [C64]) {
    generator.apply(t, psi, out);
    for z in out.iter_mut() {
        *z = C64::new(z.im, -z.re);
    }
}

fn integrate_rk4(
    generator: &dyn Generator,
    psi: &mut [C64],
    t_end: f64,
    cfg: &IntegratorConfig,
    rec: &mut Recorder<'_>,
) -> Result<usize> {
    let dim = psi.len();
    // With interval sampling, the step divides the interval exactly.
    let (h, per_sample) = match cfg.sample_interval {
        Some(dt) => {
            let n = (dt / cfg.max_step).ceil().max(1.0) as usize;
            (dt / n as f64, n)
        }
        None => {
            let n = (t_end / cfg.max_step).ceil().max(1.0);
            (t_end / n, cfg.sample_stride)
        }
    };
    let total = (t_end / h).round() as usize;
    let mut k = [vec![C64::default(); dim], vec![C64::default(); dim], vec![C64::default(); dim], vec![C64::default(); dim]];
    let mut tmp = vec![C64::default(); dim];
    for step in 0..total {
        let t = step as f64 * h;
        rhs(generator, t, psi, &mut k[0]);
        for i in 0..dim {
            tmp[i] = psi[i] + k[0][i] * (0.5 * h);
        }
        rhs(generator, t + 0.5 * h, &tmp, &mut k[1]);
        for i in 0..dim {
            tmp[i] = psi[i] + k[1][i] * (0.5 * h);
        }
        rhs(generator, t + 0.5 * h, &tmp, &mut k[2]);
        for i in 0..dim {
            tmp[i] = psi[i] + k[2][i] * h;
        }
        rhs(generator, t + h, &tmp, &mut k[3]);
        for i in 0..dim {
            psi[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * (h / 6.0);
        }
        let done = step + 1;
        if done == total || done % per_sample == 0 {
            let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            if norm_sqr.is_nan() || norm_sqr >= 2.0 {
                return Err(Error::Integration {
                    time: done as f64 * h,
                    reason: format!("fixed-step solution diverged (|psi|^2 = {norm_sqr:.3e}); reduce max_step"),
                });
            }
            rec.record(if done == total { t_end } else { done as f64 * h }, psi);
        }
    }
    Ok(total)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn integrate_dopri5(
    generator: &dyn Generator,
    psi: &mut Vec<C64>,
    t_end: f64,
    cfg: &IntegratorConfig,
    rec: &mut Recorder<'_>,
) -> Result<usize> {
    let dim = psi.len();
    let mut k: Vec<Vec<C64>> = vec![vec![C64::default(); dim]; 7];
    let mut stage = vec![C64::default(); dim];
    let mut next = vec![C64::default(); dim];

    let mut t = 0.0;
    rhs(generator, t, psi, &mut k[0]);
    let mut h = initial_step(psi, &k[0], cfg).min(t_end);
    let mut accepted = 0usize;
    // Sample times are k·interval; one falling on t_end is left to the final record.
    let mut sample_index = 1usize;
    let sample_time = |k: usize| cfg.sample_interval.map(|dt| k as f64 * dt).filter(|&ts| ts < t_end * (1.0 - 1e-12));
    let mut last_rejected = false;

    while t < t_end {
        let next_sample = sample_time(sample_index);
        let target = next_sample.unwrap_or(t_end);
        let remaining = target - t;
        // Stretch the step slightly rather than leave a sliver before the target.
        let landing = 1.01 * h >= remaining;
        let step = if landing { remaining } else { h };
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(Error::Integration { time: t, reason: format!("step size underflow (h = {h:.3e})") });
        }

        for s in 1..7 {
            for i in 0..dim {
                let mut acc = C64::default();
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += kj[i] * A[s][j];
                }
                stage[i] = psi[i] + acc * step;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(generator, t + C[s] * step, &stage, &mut tail[0]);
            if s == 6 {
                next.copy_from_slice(&stage);
            }
        }

        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = C64::default();
            for (j, kj) in k.iter().enumerate() {
                e += kj[i] * E[j];
            }
            let scale = cfg.abs_tol + cfg.rel_tol * psi[i].norm().max(next[i].norm());
            err_sq += (e * step).norm_sqr() / (scale * scale);
        }
        let err = (err_sq / dim as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration { time: t, reason: "non-finite error estimate".into() });
        }

        if err <= 1.0 {
            t = if landing { target } else { t + step };
            std::mem::swap(psi, &mut next);
            // first-same-as-last
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            accepted += 1;

            let at_sample = match next_sample {
                Some(_) if landing => {
                    sample_index += 1;
                    true
                }
                Some(_) => false,
                None => cfg.sample_interval.is_none() && accepted.is_multiple_of(cfg.sample_stride),
            };
            if t >= t_end || at_sample {
                rec.record(t, psi);
            }

            let mut factor = 0.9 * err.max(1e-10).powf(-0.2);
            factor = factor.clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            if !landing || factor < 1.0 {
                h = step * factor;
            }
            h = h.min(cfg.max_step);
            last_rejected = false;
        } else {
            h = step * (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    Ok(accepted)
}

fn initial_step(psi: &[C64], f0: &[C64], cfg: &IntegratorConfig) -> f64 {
    let d0: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let d1: f64 = f0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let h = if d1 > 1e-12 { 0.01 * d0 / d1 } else { cfg.max_step };
    h.min(cfg.max_step)
}

/// Exact propagator e^{−iHt} of a time-independent Hermitian H via
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct StaticPropagator {
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl StaticPropagator {
    pub fn new(h: &Operator) -> Self {
        let eig = h.matrix().clone().symmetric_eigen();
        Self { energies: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn state_at(&self, psi0: &QuantumState, t: f64) -> QuantumState {
        let mut coeffs = self.vectors.adjoint() * psi0.vector();
        for (c, e) in coeffs.iter_mut().zip(self.energies.iter()) {
            *c *= C64::from_polar(1.0, -e * t);
        }
        QuantumState::from_vector(&self.vectors * coeffs)
    }

    /// Samples at the given times (which must start at or after 0).
    pub fn trajectory(&self, space: &Space, psi0: &QuantumState, times: &[f64]) -> Trajectory {
        let states: Vec<QuantumState> = times.iter().map(|&t| self.state_at(psi0, t)).collect();
        Trajectory {
            space: *space,
            times: times.to_vec(),
            samples: states.iter().map(|s| Sample::of(space, s)).collect(),
            final_state: states.last().cloned().unwrap_or_else(|| psi0.clone()),
            steps: 0,
        }
    }
}

/// Largest population-table distance between two runs, matched on the
/// times of `a` (with `b` linearly interpolated when grids differ).
pub fn population_distance(a: &Trajectory, b: &Trajectory) -> Vec<f64> {
    let same_grid = a.times.len() == b.times.len()
        && a.times.iter().zip(&b.times).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0));
    if same_grid {
        return a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| x.populations.distance(&y.populations))
            .collect();
    }
    let dim = a.space.dim().min(b.space.dim());
    let columns: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let (atom, m) = b.space.label(i);
            b.samples.iter().map(|s| s.populations.get(atom, m)).collect()
        })
        .collect();
    a.times
        .iter()
        .zip(&a.samples)
        .map(|(&t, s)| {
            (0..dim)
                .map(|i| {
                    let (atom, m) = b.space.label(i);
                    let other = Trajectory::interpolate(&b.times, &columns[i], t);
                    if m > a.space.n_max() {
                        other
                    } else {
                        (s.populations.get(atom, m) - other).abs()
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub sup_distance: f64,
    pub bound: f64,
    pub lab_steps: usize,
    pub interaction_steps: usize,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.sup_distance < self.bound
    }
}

/// Integrates the lab-frame and interaction-picture Hamiltonians from the
/// same state and compares joint-basis populations, which are invariant
/// under the diagonal free evolution.
pub fn frame_populations_equivalence(
    params: &SystemParams,
    profile: &ModulationProfile,
    space: &Space,
    psi0: &QuantumState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<EquivalenceReport> {
    let mut cfg = *cfg;
    if cfg.sample_interval.is_none() {
        cfg.sample_interval = Some(t_end / 1000.0);
    }
    let lab = exact_generator(params, profile, space, Frame::Lab)?;
    let int = exact_generator(params, profile, space, Frame::Interaction)?;
    let a = evolve(space, &lab, psi0, t_end, &cfg)?;
    let b = evolve(space, &int, psi0, t_end, &cfg)?;
    let sup = population_distance(&a, &b).into_iter().fold(0.0, f64::max);
    Ok(EquivalenceReport {
        sup_distance: sup,
        bound: (10.0 * cfg.rel_tol).max(1e-6),
        lab_steps: a.steps,
        interaction_steps: b.steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub n_list: Vec<usize>,
    /// max_t |⟨n⟩(n_i) − ⟨n⟩(n_last)| for each entry of `n_list`.
    pub mean_n_difference: Vec<f64>,
    /// max_t P(m ≥ n_max − 2) for each run.
    pub tails: Vec<f64>,
    /// The smallest truncation keeps its tail below [`TAIL_LIMIT`].
    pub converged: bool,
}

impl TruncationReport {
    /// Largest ⟨n⟩ difference to the reference (largest n_max) run.
    pub fn max_difference(&self) -> f64 {
        self.mean_n_difference.iter().copied().fold(0.0, f64::max)
    }
}

/// Reruns `run` for every truncation in `n_list` and compares ⟨n⟩ with the
/// largest one.
pub fn truncation_check(
    run: impl Fn(usize) -> Result<Trajectory>,
    n_list: &[usize],
) -> Result<TruncationReport> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("truncation check needs at least two increasing n_max values".into()));
    }
    let runs: Vec<Trajectory> = n_list.iter().map(|&n| run(n)).collect::<Result<_>>()?;
    let reference = runs.last().expect("non-empty");
    let ref_n: Vec<f64> = reference.samples.iter().map(|s| s.n_mean).collect();
    let mean_n_difference = runs
        .iter()
        .map(|r| {
            r.times
                .iter()
                .zip(&r.samples)
                .map(|(&t, s)| (s.n_mean - Trajectory::interpolate(&reference.times, &ref_n, t)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let tails: Vec<f64> = runs.iter().map(|r| r.max_tail(tail_start(&r.space))).collect();
    let converged = tails[0] <= TAIL_LIMIT;
    if !converged {
        log::warn!("n_max = {} leaks {:.3e} into its Fock tail", n_list[0], tails[0]);
    }
    Ok(TruncationReport { n_list: n_list.to_vec(), mean_n_difference, tails, converged })
}

/// Least-squares fit of `A·sin²(νt) + B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationFit {
    pub frequency: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// RMS residual.
    pub residual: f64,
}

impl OscillationFit {
    pub fn model(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t).sin().powi(2) + self.offset
    }
}

/// Linear least squares for A, B at fixed ν; returns (A, B, rms residual).
fn fit_at(times: &[f64], values: &[f64], nu: f64) -> (f64, f64, f64) {
    let n = times.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in times.iter().zip(values) {
        let x = (nu * t).sin().powi(2);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = n * sxx - sx * sx;
    let (a, b) = if det.abs() < 1e-300 { (0.0, sy / n) } else { ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det) };
    let ss: f64 = times
        .iter()
        .zip(values)
        .map(|(&t, &y)| {
            let r = y - (a * (nu * t).sin().powi(2) + b);
            r * r
        })
        .sum();
    (a, b, (ss / n).sqrt())
}

/// Fits `A·sin²(νt) + B` to a named observable. The dominant slow frequency
/// is located from the spectrum of the uniformly resampled series and then
/// refined by minimizing the least-squares residual.
pub fn fit_oscillation(traj: &Trajectory, observable: &str) -> Result<OscillationFit> {
    let values = traj.series(observable)?;
    fit_series(&traj.times, &values)
}

pub fn fit_series(times: &[f64], values: &[f64]) -> Result<OscillationFit> {
    if times.len() < 16 {
        return Err(Error::Fit(format!("need at least 16 samples (got {})", times.len())));
    }
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    if span.is_nan() || span <= 0.0 {
        return Err(Error::Fit("trajectory has zero duration".into()));
    }
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if max - min <= 1e-12 * max.abs().max(1.0) {
        return Err(Error::Fit("series is flat".into()));
    }

    let n = times.len().clamp(256, 1 << 15);
    let dt = span / (n - 1) as f64;
    let mut buf: Vec<C64> = (0..n)
        .map(|i| C64::from(Trajectory::interpolate(times, values, t0 + i as f64 * dt)))
        .collect();
    let mean = buf.iter().map(|z| z.re).sum::<f64>() / n as f64;
    buf.iter_mut().for_each(|z| z.re -= mean);
    let len = n as f64 * dt;
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = (1..n / 2)
        .max_by(|&i, &j| buf[i].norm_sqr().total_cmp(&buf[j].norm_sqr()))
        .ok_or_else(|| Error::Fit("no spectral content".into()))?;

    // cos(2νt) at frequency f means ν = πf; search one bin either side.
    let bin = PI / len;
    let lo = ((peak as f64 - 1.0) * bin).max(0.25 * bin);
    let hi = (peak as f64 + 1.0) * bin;
    let residual = |nu: f64| fit_at(times, values, nu).2;

    let scan = 64;
    let grid: Vec<f64> = (0..=scan).map(|i| lo + (hi - lo) * i as f64 / scan as f64).collect();
    let best = grid
        .iter()
        .copied()
        .min_by(|a, b| residual(*a).total_cmp(&residual(*b)))
        .expect("non-empty grid");
    let step = (hi - lo) / scan as f64;
    let (mut a, mut b) = ((best - step).max(lo * 0.5), best + step);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let (mut fc, mut fd) = (residual(c), residual(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = residual(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = residual(d);
        }
    }
    let nu = 0.5 * (a + b);
    let (amp, offset, res) = fit_at(times, values, nu);
    if res > 0.2 * amp.abs() {
        return Err(Error::Fit(format!(
            "no dominant oscillation (residual {res:.3e} vs amplitude {amp:.3e})"
        )));
    }
    Ok(OscillationFit { frequency: nu, amplitude: amp, offset, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{DrivenHamiltonian, FnGenerator};
    use crate::hilbert::Operators;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_hamiltonian_is_identity() {
        let space = Space::new(3).unwrap();
        let h = DrivenHamiltonian::constant(Operator::zeros(space.dim()));
        let psi = QuantumState::basis(&space, Atom::Excited, 0).unwrap();
        let traj = evolve(&space, &h, &psi, 10.0, &IntegratorConfig::for_drive(1.0)).unwrap();
        assert_eq!(traj.final_state, psi);
        assert!(traj.samples.iter().all(|s| s.populations.get(Atom::Excited, 0) == 1.0));
    }

    #[test]
    fn sampling_stride_and_interval() {
        let space = Space::new(3).unwrap();
        let ops = Operators::new(&space);
        let h = DrivenHamiltonian::constant(ops.sigma_z.scale_real(0.5));
        let psi = QuantumState::basis(&space, Atom::Ground, 0).unwrap();
        let cfg = IntegratorConfig::for_drive(1.0).with_interval(0.5);
        let traj = evolve(&space, &h, &psi, 3.0, &cfg).unwrap();
        assert_eq!(traj.times.len(), 7);
        for (i, &t) in traj.times.iter().enumerate() {
            assert_abs_diff_eq!(t, 0.5 * i as f64, epsilon = 1e-12);
        }
        let mut rk = IntegratorConfig::fixed_rk4(0.1);
        rk.sample_stride = 5;
        let traj = evolve(&space, &h, &psi, 3.0, &rk).unwrap();
        assert_eq!(traj.steps, 30);
        assert_eq!(traj.times.len(), 7);
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 3.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let space = Space::new(4).unwrap();
        let h = DrivenHamiltonian::constant(Operator::zeros(space.dim()));
        let top = QuantumState::basis(&space, Atom::Ground, 3).unwrap();
        let cfg = IntegratorConfig::for_drive(1.0);
        assert!(matches!(evolve(&space, &h, &top, 1.0, &cfg), Err(Error::Config(_))));
        let psi = QuantumState::basis(&space, Atom::Ground, 0).unwrap();
        let mut bad = cfg;
        bad.rel_tol = 1e-3;
        assert!(evolve(&space, &h, &psi, 1.0, &bad).is_err());
        let other = Space::new(5).unwrap();
        let wrong = QuantumState::basis(&other, Atom::Ground, 0).unwrap();
        assert!(matches!(evolve(&space, &h, &wrong, 1.0, &cfg), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn underflow_reports_time() {
        // An enormous coupling switched on at t = 1 forces the step size to collapse.
        let space = Space::new(3).unwrap();
        let ops = Operators::new(&space);
        let x = &ops.sigma_plus + &ops.sigma_minus;
        let h = FnGenerator::new(space.dim(), move |t: f64| x.scale_real(if t < 1.0 { 1.0 } else { 1e30 }));
        let psi = QuantumState::basis(&space, Atom::Ground, 0).unwrap();
        match evolve(&space, &h, &psi, 2.0, &IntegratorConfig::for_drive(1.0)) {
            Err(Error::Integration { time, .. }) => assert!(time > 0.9 && time <= 1.0),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_fit_recovers_frequency() {
        let chi = 7e-5;
        let times: Vec<f64> = (0..4000).map(|i| i as f64 * 25.0).collect();
        let values: Vec<f64> = times.iter().map(|t| (chi * t).sin().powi(2)).collect();
        let fit = fit_series(&times, &values).unwrap();
        assert!((fit.frequency - chi).abs() / chi < 0.01);
        assert_abs_diff_eq!(fit.amplitude, 1.0, epsilon = 1e-6);

        let cosine: Vec<f64> = times.iter().map(|t| 0.2 + 0.6 * (chi * t).cos().powi(2)).collect();
        let fit = fit_series(&times, &cosine).unwrap();
        assert!((fit.frequency - chi).abs() / chi < 0.01);
        assert_abs_diff_eq!(fit.amplitude, -0.6, epsilon = 1e-6);

        let noise: Vec<f64> = (0..4000).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        assert!(matches!(fit_series(&times, &noise), Err(Error::Fit(_))));
        assert!(matches!(fit_series(&times, &vec![0.3; times.len()]), Err(Error::Fit(_))));
    }

    #[test]
    fn series_names() {
        let space = Space::new(5).unwrap();
        let psi = QuantumState::basis(&space, Atom::Excited, 1).unwrap();
        let h = DrivenHamiltonian::constant(Operator::zeros(space.dim()));
        let traj = evolve(&space, &h, &psi, 1.0, &IntegratorConfig::for_drive(1.0)).unwrap();
        assert_eq!(traj.series("P_e_1").unwrap()[0], 1.0);
        assert_eq!(traj.series("n_mean").unwrap()[0], 1.0);
        assert!(traj.series("P_x_1").is_err());
        assert!(traj.series("P_g_9").is_err());
    }
}
