// SPDX-License-Identifier: Apache-2.0

//! Truncated two-level ⊗ Fock space.
//!
//! Basis ordering is atom-major: `index = atom_bit·(n_max+1) + m` with
//! `atom_bit = 0` for |g⟩ and `1` for |e⟩. Every CSV column and every
//! population table in the crate follows this ordering.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Atomic (qubit) basis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    Ground,
    Excited,
}

impl Atom {
    pub fn bit(self) -> usize {
        match self {
            Atom::Ground => 0,
            Atom::Excited => 1,
        }
    }

    /// Eigenvalue of σ_z.
    pub fn sigma_z(self) -> f64 {
        match self {
            Atom::Ground => -1.0,
            Atom::Excited => 1.0,
        }
    }

    pub fn label(self) -> char {
        match self {
            Atom::Ground => 'g',
            Atom::Excited => 'e',
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Shape of the truncated space: photon numbers `0..=n_max` for each atomic level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Space {
    n_max: usize,
}

impl Space {
    /// Build a space keeping Fock states up to `n_max`. At least |g,2⟩ must exist.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::Config(format!(
                "n_max must be at least 2 (got {n_max})"
            )));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn index(&self, atom: Atom, m: usize) -> usize {
        debug_assert!(m <= self.n_max);
        atom.bit() * self.levels() + m
    }

    /// Inverse of [`Space::index`].
    pub fn label(&self, index: usize) -> (Atom, usize) {
        let atom = if index / self.levels() == 0 { Atom::Ground } else { Atom::Excited };
        (atom, index % self.levels())
    }
}

/// Dense complex matrix on a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        assert!(matrix.is_square(), "operators must be square");
        Self(matrix)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `max|H − H†| / max(max|H|, tiny)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let diff = &self.0 - self.0.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_defect() <= rel_tol
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn apply(&self, psi: &QuantumState) -> Result<QuantumState> {
        check_dim(self.dim(), psi.dim())?;
        Ok(QuantumState(&self.0 * &psi.0))
    }

    /// Non-zero entries as `(row, col, value)`, row-major.
    pub fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        let n = self.dim();
        let mut out = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = self.0[(r, c)];
                if v != ZERO {
                    out.push((r, c, v));
                }
            }
        }
        out
    }

    /// True if `⟨i|O|j⟩ ≠ 0` only for `(i, j)` accepted by `allowed`.
    pub fn respects_pattern(&self, allowed: impl Fn(usize, usize) -> bool) -> bool {
        self.nonzeros().iter().all(|&(r, c, _)| allowed(r, c))
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator(self.0 + rhs.0)
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Add<&Operator> for Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(self.0 + &rhs.0)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator(self.0 - rhs.0)
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-self.0)
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale_real(rhs)
    }
}

/// Ladder and Pauli operators on the full space.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: Operator,
    pub a_dag: Operator,
    pub n: Operator,
    pub sigma_plus: Operator,
    pub sigma_minus: Operator,
    pub sigma_z: Operator,
    pub identity: Operator,
}

impl Operators {
    pub fn new(space: &Space) -> Self {
        let dim = space.dim();
        let mut a = DMatrix::zeros(dim, dim);
        let mut sp = DMatrix::zeros(dim, dim);
        let mut sz = DMatrix::zeros(dim, dim);
        for atom in [Atom::Ground, Atom::Excited] {
            for m in 1..=space.n_max() {
                a[(space.index(atom, m - 1), space.index(atom, m))] = C64::from((m as f64).sqrt());
            }
            for m in 0..=space.n_max() {
                let i = space.index(atom, m);
                sz[(i, i)] = C64::from(atom.sigma_z());
            }
        }
        for m in 0..=space.n_max() {
            sp[(space.index(Atom::Excited, m), space.index(Atom::Ground, m))] = ONE;
        }
        let a = Operator(a);
        let a_dag = a.adjoint();
        let n = &a_dag * &a;
        let sigma_plus = Operator(sp);
        let sigma_minus = sigma_plus.adjoint();
        Self {
            a,
            a_dag,
            n,
            sigma_plus,
            sigma_minus,
            sigma_z: Operator(sz),
            identity: Operator::identity(dim),
        }
    }
}

pub fn build_operators(space: &Space) -> Operators {
    Operators::new(space)
}

/// Normalized pure state in the joint basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState(DVector<C64>);

impl QuantumState {
    pub fn basis(space: &Space, atom: Atom, m: usize) -> Result<Self> {
        if m > space.n_max() {
            return Err(Error::Config(format!(
                "photon number {m} exceeds n_max = {}",
                space.n_max()
            )));
        }
        let mut v = DVector::zeros(space.dim());
        v[space.index(atom, m)] = ONE;
        Ok(Self(v))
    }

    /// Normalizes the given amplitudes; rejects the zero vector.
    pub fn from_amplitudes(space: &Space, amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(space.dim(), amplitudes.len())?;
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Config("initial amplitudes have zero norm".into()));
        }
        Ok(Self(v / C64::from(norm)))
    }

    /// Wraps a raw vector without normalizing it.
    pub fn from_vector(v: DVector<C64>) -> Self {
        Self(v)
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn amplitude(&self, space: &Space, atom: Atom, m: usize) -> C64 {
        self.0[space.index(atom, m)]
    }

    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.0.dotc(&other.0)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// ψ†Oψ.
pub fn expectation(op: &Operator, psi: &QuantumState) -> Result<C64> {
    check_dim(op.dim(), psi.dim())?;
    Ok(psi.0.dotc(&(&op.0 * &psi.0)))
}

/// Real part of ψ†Oψ for a Hermitian observable. Panics if the imaginary
/// residual exceeds 1e-10 (relative to the operator scale), which means the
/// observable was not Hermitian.
pub fn expectation_real(op: &Operator, psi: &QuantumState) -> Result<f64> {
    let z = expectation(op, psi)?;
    let scale = op.max_abs().max(1.0) * psi.norm_sqr().max(1.0);
    assert!(
        z.im.abs() < 1e-10 * scale,
        "imaginary residual {:.3e} in expectation of a Hermitian observable",
        z.im
    );
    Ok(z.re)
}

/// Joint-basis probabilities `P_{x,m}` with their atomic marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations {
    pub ground: Vec<f64>,
    pub excited: Vec<f64>,
}

impl Populations {
    pub fn get(&self, atom: Atom, m: usize) -> f64 {
        match atom {
            Atom::Ground => self.ground[m],
            Atom::Excited => self.excited[m],
        }
    }

    pub fn p_g(&self) -> f64 {
        self.ground.iter().sum()
    }

    pub fn p_e(&self) -> f64 {
        self.excited.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.p_g() + self.p_e()
    }

    /// ⟨n⟩ from the diagonal of n = a†a.
    pub fn mean_photon_number(&self) -> f64 {
        self.ground
            .iter()
            .zip(&self.excited)
            .enumerate()
            .map(|(m, (g, e))| m as f64 * (g + e))
            .sum()
    }

    /// Probability of finding at least `from_m` photons.
    pub fn tail(&self, from_m: usize) -> f64 {
        self.ground
            .iter()
            .zip(&self.excited)
            .skip(from_m)
            .map(|(g, e)| g + e)
            .sum()
    }

    /// Basis-ordered probabilities (ground block then excited block).
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.ground.iter().chain(self.excited.iter()).copied()
    }

    /// L∞ distance between two tables on the same space.
    pub fn distance(&self, other: &Populations) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub fn populations(space: &Space, psi: &QuantumState) -> Populations {
    let levels = space.levels();
    let probs: Vec<f64> = psi.0.iter().map(|z| z.norm_sqr()).collect();
    Populations {
        ground: probs[..levels].to_vec(),
        excited: probs[levels..].to_vec(),
    }
}
