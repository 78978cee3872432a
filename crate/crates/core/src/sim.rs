//! Noisy density-matrix simulation and Pauli-observable estimation.
//!
//! After every gate the noise channel acts on exactly that gate's qubits:
//!
//! - depolarizing, one qubit: `(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`;
//! - depolarizing, two qubits: `(1-p) rho + p/15 sum_{P != II} P rho P`;
//! - amplitude damping with `gamma = p`, independently on each target qubit.
//!
//! Idle qubits are noiseless.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{apply_matrix, qubit_mask, Circuit, GateMatrix, MAX_DENSE_QUBITS};
use crate::zne::{Executor, ExecutorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{found} qubits exceeds the dense simulation limit of {max}")]
    TooManyQubits { found: usize, max: usize },
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid observable: {0}")]
    InvalidObservable(String),
    #[error("shots must be at least 1")]
    ZeroShots,
    #[error("expectation value has imaginary part {0}; operator is not Hermitian")]
    NotHermitian(f64),
    #[error("matrix is not a square power-of-two dimension")]
    BadMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Depolarizing,
    AmplitudeDamping,
}

/// A single noise channel kind with one strength applied after every gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    strength: f64,
}

impl NoiseModel {
    pub fn none() -> NoiseModel {
        NoiseModel { kind: NoiseKind::None, strength: 0.0 }
    }

    pub fn new(kind: NoiseKind, strength: f64) -> Result<NoiseModel, SimError> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(SimError::InvalidNoise(format!("strength {strength} outside [0, 1]")));
        }
        Ok(NoiseModel { kind, strength: if kind == NoiseKind::None { 0.0 } else { strength } })
    }

    pub fn depolarizing(p: f64) -> Result<NoiseModel, SimError> {
        NoiseModel::new(NoiseKind::Depolarizing, p)
    }

    pub fn amplitude_damping(gamma: f64) -> Result<NoiseModel, SimError> {
        NoiseModel::new(NoiseKind::AmplitudeDamping, gamma)
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NoiseKind::None => write!(f, "none"),
            NoiseKind::Depolarizing => write!(f, "depolarizing:{}", self.strength),
            NoiseKind::AmplitudeDamping => write!(f, "amplitude-damping:{}", self.strength),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = SimError;

    /// `none`, `depolarizing:<p>` or `amplitude-damping:<p>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "none" {
            return Ok(NoiseModel::none());
        }
        let (kind, p) = s
            .split_once(':')
            .ok_or_else(|| SimError::InvalidNoise(format!("expected <kind>:<p> or none, got {s:?}")))?;
        let p: f64 = p.parse().map_err(|_| SimError::InvalidNoise(format!("bad strength {p:?}")))?;
        match kind {
            "depolarizing" => NoiseModel::depolarizing(p),
            "amplitude-damping" => NoiseModel::amplitude_damping(p),
            other => Err(SimError::InvalidNoise(format!("unknown noise kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// One weighted Pauli string; letter `k` acts on qubit `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub paulis: Vec<Pauli>,
}

impl PauliTerm {
    fn is_identity(&self) -> bool {
        self.paulis.iter().all(|&p| p == Pauli::I)
    }

    /// Basis-index bits flipped by the string, and the phase `P|i> = phase(i) |i ^ flip>`.
    fn action(&self) -> (usize, impl Fn(usize) -> Complex64 + '_) {
        let n = self.paulis.len();
        let flip = self
            .paulis
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |acc, (q, _)| acc | qubit_mask(n, q));
        let phase = move |i: usize| {
            let mut ph = Complex64::new(1.0, 0.0);
            for (q, p) in self.paulis.iter().enumerate() {
                let bit = i & qubit_mask(n, q) != 0;
                match (p, bit) {
                    (Pauli::Y, false) => ph *= Complex64::new(0.0, 1.0),
                    (Pauli::Y, true) => ph *= Complex64::new(0.0, -1.0),
                    (Pauli::Z, true) => ph = -ph,
                    _ => {}
                }
            }
            ph
        };
        (flip, phase)
    }
}

/// Real-weighted sum of Pauli strings over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Observable {
    /// Builds an observable from `(coefficient, "IXYZ..." string)` pairs.
    pub fn from_terms<S: AsRef<str>>(terms: &[(f64, S)]) -> Result<Observable, SimError> {
        let first = terms.first().ok_or_else(|| SimError::InvalidObservable("no terms".into()))?;
        let num_qubits = first.1.as_ref().chars().count();
        if num_qubits == 0 {
            return Err(SimError::InvalidObservable("empty Pauli string".into()));
        }
        let mut parsed = Vec::with_capacity(terms.len());
        for (i, (coeff, s)) in terms.iter().enumerate() {
            let s = s.as_ref();
            if !coeff.is_finite() {
                return Err(SimError::InvalidObservable(format!("terms[{i}]: coefficient {coeff} is not finite")));
            }
            let paulis: Option<Vec<Pauli>> = s.chars().map(Pauli::from_char).collect();
            let paulis =
                paulis.ok_or_else(|| SimError::InvalidObservable(format!("terms[{i}]: bad Pauli string {s:?}")))?;
            if paulis.len() != num_qubits {
                return Err(SimError::InvalidObservable(format!(
                    "terms[{i}]: string {s:?} has length {} but the observable acts on {num_qubits} qubits",
                    paulis.len()
                )));
            }
            parsed.push(PauliTerm { coeff: *coeff, paulis });
        }
        Ok(Observable { num_qubits, terms: parsed })
    }

    /// Projector onto `|0...0>`, expanded as `prod_k (I + Z_k) / 2`.
    pub fn all_zeros_projector(num_qubits: usize) -> Observable {
        let weight = 0.5f64.powi(num_qubits as i32);
        let terms = (0..1usize << num_qubits)
            .map(|mask| PauliTerm {
                coeff: weight,
                paulis: (0..num_qubits)
                    .map(|q| if mask & qubit_mask(num_qubits, q) != 0 { Pauli::Z } else { Pauli::I })
                    .collect(),
            })
            .collect();
        Observable { num_qubits, terms }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Whether every term is an I/Z string.
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.paulis.iter().all(|p| matches!(p, Pauli::I | Pauli::Z)))
    }

    /// Sum of absolute coefficients, the largest possible `|<O>|`.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn to_json(&self) -> String {
        let raw = RawObservable {
            terms: self
                .terms
                .iter()
                .map(|t| RawTerm { coeff: t.coeff, paulis: t.paulis.iter().map(|p| p.as_char()).collect() })
                .collect(),
        };
        serde_json::to_string(&raw).expect("observable serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Observable, SimError> {
        let raw: RawObservable =
            serde_json::from_str(text).map_err(|e| SimError::InvalidObservable(format!("parse error: {e}")))?;
        let pairs: Vec<(f64, String)> = raw.terms.into_iter().map(|t| (t.coeff, t.paulis)).collect();
        Observable::from_terms(&pairs)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservable {
    terms: Vec<RawTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coeff: f64,
    paulis: String,
}

/// Dense `2^n x 2^n` density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// `|0...0><0...0|`.
    pub fn zero_state(num_qubits: usize) -> DensityMatrix {
        let dim = 1 << num_qubits;
        let mut rho = DMatrix::zeros(dim, dim);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix { num_qubits, rho }
    }

    /// Wraps an arbitrary square matrix of power-of-two size. No physicality
    /// checks are made; see [`DensityMatrix::trace`] and friends.
    pub fn from_matrix(rho: DMatrix<Complex64>) -> Result<DensityMatrix, SimError> {
        let dim = rho.nrows();
        if dim == 0 || rho.ncols() != dim || !dim.is_power_of_two() {
            return Err(SimError::BadMatrix);
        }
        Ok(DensityMatrix { num_qubits: dim.trailing_zeros() as usize, rho })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.rho.nrows();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..=i {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    /// `<i|rho|i>`.
    pub fn probability(&self, basis_index: usize) -> f64 {
        self.rho[(basis_index, basis_index)].re
    }

    /// Replaces `rho` by `K rho K^dagger`, assuming `rho` is Hermitian:
    /// `K (K rho)^dagger = K rho K^dagger`.
    fn conjugate_in_place(rho: &mut DMatrix<Complex64>, n: usize, qubits: &[usize], k: &GateMatrix) {
        let dim = rho.nrows();
        for col in rho.as_mut_slice().chunks_mut(dim) {
            apply_matrix(col, n, qubits, k);
        }
        rho.adjoint_mut();
        for col in rho.as_mut_slice().chunks_mut(dim) {
            apply_matrix(col, n, qubits, k);
        }
    }

    /// Applies every gate of `circuit`, each followed by the noise channel.
    pub fn evolve(&mut self, circuit: &Circuit, noise: &NoiseModel) -> Result<(), SimError> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(SimError::DimensionMismatch { expected: self.num_qubits, found: circuit.num_qubits() });
        }
        for gate in circuit.gates() {
            self.apply_unitary(gate.qubits(), &gate.matrix());
            self.apply_noise(gate.qubits(), noise);
        }
        Ok(())
    }

    fn apply_unitary(&mut self, qubits: &[usize], u: &GateMatrix) {
        DensityMatrix::conjugate_in_place(&mut self.rho, self.num_qubits, qubits, u);
    }

    /// `P rho P` for a Pauli string given on a subset of qubits.
    fn pauli_conjugate(&self, qubits: &[usize], letters: &[Pauli]) -> DMatrix<Complex64> {
        let mut full = vec![Pauli::I; self.num_qubits];
        for (&q, &p) in qubits.iter().zip(letters) {
            full[q] = p;
        }
        let term = PauliTerm { coeff: 1.0, paulis: full };
        let (flip, phase) = term.action();
        let dim = self.rho.nrows();
        let phases: Vec<Complex64> = (0..dim).map(&phase).collect();
        DMatrix::from_fn(dim, dim, |i, j| {
            let (k, l) = (i ^ flip, j ^ flip);
            phases[k] * self.rho[(k, l)] * phases[l].conj()
        })
    }

    fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let strings: Vec<Vec<Pauli>> = if qubits.len() == 1 {
            LETTERS[1..].iter().map(|&a| vec![a]).collect()
        } else {
            LETTERS
                .iter()
                .flat_map(|&a| LETTERS.iter().map(move |&b| vec![a, b]))
                .filter(|s| s.iter().any(|&x| x != Pauli::I))
                .collect()
        };
        let weight = p / strings.len() as f64;
        let mut out = &self.rho * Complex64::new(1.0 - p, 0.0);
        for s in &strings {
            out += self.pauli_conjugate(qubits, s) * Complex64::new(weight, 0.0);
        }
        self.rho = out;
    }

    fn amplitude_damp(&mut self, qubit: usize, gamma: f64) {
        if gamma == 0.0 {
            return;
        }
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let k0 = GateMatrix::One([[one, z], [z, Complex64::new((1.0 - gamma).sqrt(), 0.0)]]);
        let k1 = GateMatrix::One([[z, Complex64::new(gamma.sqrt(), 0.0)], [z, z]]);
        let mut a = self.rho.clone();
        DensityMatrix::conjugate_in_place(&mut a, self.num_qubits, &[qubit], &k0);
        DensityMatrix::conjugate_in_place(&mut self.rho, self.num_qubits, &[qubit], &k1);
        self.rho += a;
    }

    fn apply_noise(&mut self, qubits: &[usize], noise: &NoiseModel) {
        match noise.kind {
            NoiseKind::None => {}
            NoiseKind::Depolarizing => self.depolarize(qubits, noise.strength),
            NoiseKind::AmplitudeDamping => {
                for &q in qubits {
                    self.amplitude_damp(q, noise.strength);
                }
            }
        }
    }
}

/// Runs the circuit from `|0...0>`, applying each gate followed by the noise
/// channel on that gate's qubits. Terminal measurement flags are ignored; the
/// returned state is the one being measured.
pub fn simulate(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix, SimError> {
    if circuit.num_qubits() > MAX_DENSE_QUBITS {
        return Err(SimError::TooManyQubits { found: circuit.num_qubits(), max: MAX_DENSE_QUBITS });
    }
    let mut rho = DensityMatrix::zero_state(circuit.num_qubits());
    rho.evolve(circuit, noise)?;
    Ok(rho)
}

fn check_dims(rho: &DensityMatrix, obs: &Observable) -> Result<(), SimError> {
    if rho.num_qubits != obs.num_qubits {
        return Err(SimError::DimensionMismatch { expected: obs.num_qubits, found: rho.num_qubits });
    }
    Ok(())
}

/// `Tr(rho P)` for one Pauli string.
fn pauli_trace(rho: &DensityMatrix, term: &PauliTerm) -> Complex64 {
    let (flip, phase) = term.action();
    (0..rho.rho.nrows()).map(|i| rho.rho[(i, i ^ flip)] * phase(i)).sum()
}

fn term_expectations(rho: &DensityMatrix, obs: &Observable) -> Result<Vec<f64>, SimError> {
    check_dims(rho, obs)?;
    obs.terms
        .iter()
        .map(|t| {
            let v = pauli_trace(rho, t);
            if v.im.abs() > 1e-9 {
                Err(SimError::NotHermitian(v.im))
            } else {
                Ok(v.re)
            }
        })
        .collect()
}

/// `sum_k c_k Tr(rho P_k)`.
pub fn expectation(rho: &DensityMatrix, obs: &Observable) -> Result<f64, SimError> {
    let means = term_expectations(rho, obs)?;
    Ok(obs.terms.iter().zip(means).map(|(t, m)| t.coeff * m).sum())
}

/// Shot-based estimate: each non-identity term is measured `shots` times
/// (outcomes `+1` with probability `(1 + <P>)/2`) and the empirical means
/// are combined with the term coefficients.
pub fn sample_expectation(rho: &DensityMatrix, obs: &Observable, shots: u64, seed: u64) -> Result<f64, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let means = term_expectations(rho, obs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for (term, mean) in obs.terms.iter().zip(means) {
        if term.is_identity() {
            total += term.coeff;
            continue;
        }
        let p_plus = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
        let plus = Binomial::new(shots, p_plus).expect("probability clamped to [0, 1]").sample(&mut rng);
        let estimate = (2.0 * plus as f64 - shots as f64) / shots as f64;
        total += term.coeff * estimate;
    }
    Ok(total)
}

/// Shot-based estimate from `shots` computational-basis measurements: each
/// shot yields a bitstring `i` with probability `<i|rho|i>`, and every term
/// contributes its eigenvalue on `i`. Only I/Z strings are measurable this way.
/// For the all-zeros projector this is the observed frequency of `0...0`.
pub fn sample_bitstrings_expectation(
    rho: &DensityMatrix,
    obs: &Observable,
    shots: u64,
    seed: u64,
) -> Result<f64, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    check_dims(rho, obs)?;
    if !obs.is_diagonal() {
        return Err(SimError::InvalidObservable("bitstring sampling needs an I/Z-only observable".into()));
    }
    let probs: Vec<f64> = (0..rho.rho.nrows()).map(|i| rho.probability(i).max(0.0)).collect();
    let dist = WeightedIndex::new(&probs).map_err(|e| SimError::InvalidObservable(format!("bad state: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    let mut total = 0.0;
    for term in &obs.terms {
        let (_, phase) = term.action();
        let signed: f64 = counts.iter().enumerate().map(|(i, &k)| phase(i).re * k as f64).sum();
        total += term.coeff * signed / shots as f64;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionMode {
    Exact,
    /// Independent shots per Pauli term; see [`sample_expectation`].
    Sampled {
        shots: u64,
        seed: u64,
    },
    /// Computational-basis shots; see [`sample_bitstrings_expectation`].
    SampledBitstrings {
        shots: u64,
        seed: u64,
    },
}

/// Simulator-backed executor returned by [`make_executor`].
///
/// In sampled mode the k-th call uses the seed derived from `(seed, k)`, so a
/// fresh executor replays the same sequence when called in the same order.
/// Sampled executors are therefore not reentrant; give concurrent callers
/// their own executors with distinct seeds.
#[derive(Debug)]
pub struct SimExecutor {
    noise: NoiseModel,
    observable: Observable,
    mode: ExecutionMode,
    calls: AtomicU64,
}

impl SimExecutor {
    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn evaluate(&self, circuit: &Circuit) -> Result<f64, SimError> {
        if circuit.num_qubits() != self.observable.num_qubits {
            return Err(SimError::DimensionMismatch {
                expected: self.observable.num_qubits,
                found: circuit.num_qubits(),
            });
        }
        let rho = simulate(circuit, &self.noise)?;
        match self.mode {
            ExecutionMode::Exact => expectation(&rho, &self.observable),
            ExecutionMode::Sampled { shots, seed } => {
                let call = self.calls.fetch_add(1, Ordering::SeqCst);
                sample_expectation(&rho, &self.observable, shots, crate::seed::derive(seed, &[call]))
            }
            ExecutionMode::SampledBitstrings { shots, seed } => {
                let call = self.calls.fetch_add(1, Ordering::SeqCst);
                sample_bitstrings_expectation(&rho, &self.observable, shots, crate::seed::derive(seed, &[call]))
            }
        }
    }
}

impl Executor for SimExecutor {
    fn execute(&self, circuit: &Circuit) -> Result<f64, ExecutorError> {
        self.evaluate(circuit).map_err(Into::into)
    }

    fn is_reentrant(&self) -> bool {
        self.mode == ExecutionMode::Exact
    }
}

pub fn make_executor(noise: NoiseModel, observable: Observable, mode: ExecutionMode) -> Result<SimExecutor, SimError> {
    match mode {
        ExecutionMode::Sampled { shots: 0, .. } | ExecutionMode::SampledBitstrings { shots: 0, .. } => {
            return Err(SimError::ZeroShots)
        }
        ExecutionMode::SampledBitstrings { .. } if !observable.is_diagonal() => {
            return Err(SimError::InvalidObservable("bitstring sampling needs an I/Z-only observable".into()))
        }
        _ => {}
    }
    Ok(SimExecutor { noise, observable, mode, calls: AtomicU64::new(0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> Circuit {
        Circuit::from_gates(2, [Gate::h(0), Gate::cnot(0, 1)]).unwrap()
    }

    fn z() -> Observable {
        Observable::from_terms(&[(1.0, "Z")]).unwrap()
    }

    #[test]
    fn empty_circuit_stays_in_ground_state() {
        let rho = simulate(&Circuit::new(1).unwrap(), &NoiseModel::depolarizing(0.3).unwrap()).unwrap();
        assert_eq!(rho, DensityMatrix::zero_state(1));
    }

    #[test]
    fn bell_ground_amplitude() {
        let rho = simulate(&bell(), &NoiseModel::none()).unwrap();
        assert!((rho.probability(0) - 0.5).abs() < 1e-15);
        let zz = Observable::from_terms(&[(1.0, "ZZ")]).unwrap();
        assert!((expectation(&rho, &zz).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarized_x_flip() {
        // Kraus oracle: (1-p) X|0><0|X + p/3 sum_P P X|0><0|X P, written out for p = 0.1
        let p = 0.1;
        // X and Y map |1><1| to |0><0|, Z keeps it
        let expect_p11 = (1.0 - p) + p / 3.0;
        let expect_p00 = 2.0 * p / 3.0;
        let x = Circuit::from_gates(1, [Gate::x(0)]).unwrap();
        let rho = simulate(&x, &NoiseModel::depolarizing(p).unwrap()).unwrap();
        assert!((rho.probability(1) - expect_p11).abs() < 1e-15);
        assert!((rho.probability(0) - expect_p00).abs() < 1e-15);
        let ez = expectation(&rho, &z()).unwrap();
        assert!((ez + (1.0 - 4.0 * 0.1 / 3.0)).abs() < 1e-14, "{ez}");
    }

    #[test]
    fn expectation_examples() {
        let ground = DensityMatrix::zero_state(1);
        assert_eq!(expectation(&ground, &z()).unwrap(), 1.0);

        let mixed = DensityMatrix::from_matrix(DMatrix::identity(4, 4) * c(0.25, 0.0)).unwrap();
        let h =
            Observable::from_terms(&[(-0.4, "II"), (0.3, "ZI"), (-0.2, "IZ"), (0.5, "ZZ"), (0.1, "XX"), (0.1, "YY")])
                .unwrap();
        assert!((expectation(&mixed, &h).unwrap() + 0.4).abs() < 1e-15);

        assert_eq!(expectation(&ground, &h), Err(SimError::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn y_phase_convention() {
        // |+i> = S H |0> has <Y> = +1
        let c = Circuit::from_gates(1, [Gate::h(0), Gate::s(0)]).unwrap();
        let rho = simulate(&c, &NoiseModel::none()).unwrap();
        let y = Observable::from_terms(&[(1.0, "Y")]).unwrap();
        assert!((expectation(&rho, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qubit_ordering_is_big_endian() {
        // X on qubit 1 of two prepares |01>, basis index 1
        let c = Circuit::from_gates(2, [Gate::x(1)]).unwrap();
        let rho = simulate(&c, &NoiseModel::none()).unwrap();
        assert_eq!(rho.probability(1), 1.0);
        let zi = Observable::from_terms(&[(1.0, "ZI")]).unwrap();
        let iz = Observable::from_terms(&[(1.0, "IZ")]).unwrap();
        assert_eq!(expectation(&rho, &zi).unwrap(), 1.0);
        assert_eq!(expectation(&rho, &iz).unwrap(), -1.0);
    }

    #[test]
    fn sampled_examples() {
        let ground = DensityMatrix::zero_state(1);
        assert_eq!(sample_expectation(&ground, &z(), 17, 3).unwrap(), 1.0);

        let plus = simulate(&Circuit::from_gates(1, [Gate::h(0)]).unwrap(), &NoiseModel::none()).unwrap();
        let a = sample_expectation(&plus, &z(), 100, 42).unwrap();
        let b = sample_expectation(&plus, &z(), 100, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.abs() <= 1.0);

        let rho = simulate(&bell(), &NoiseModel::none()).unwrap();
        let zz = Observable::from_terms(&[(1.0, "ZZ")]).unwrap();
        let shots = 1_000_000u64;
        let est = sample_expectation(&rho, &zz, shots, 9).unwrap();
        assert!((est - 1.0).abs() <= 5.0 / (shots as f64).sqrt());
        assert_eq!(sample_expectation(&rho, &zz, 0, 9), Err(SimError::ZeroShots));
    }

    #[test]
    fn bitstring_sampling() {
        let rho = simulate(&bell(), &NoiseModel::none()).unwrap();
        let proj = Observable::all_zeros_projector(2);
        let shots = 10_000u64;
        let est = sample_bitstrings_expectation(&rho, &proj, shots, 3).unwrap();
        // projector estimate is a frequency
        let counts = est * shots as f64;
        assert!((counts - counts.round()).abs() < 1e-6);
        assert!((est - 0.5).abs() < 5.0 * 0.5 / (shots as f64).sqrt());
        let zz = Observable::from_terms(&[(1.0, "ZZ")]).unwrap();
        assert_eq!(sample_bitstrings_expectation(&rho, &zz, 100, 1).unwrap(), 1.0);
        let xx = Observable::from_terms(&[(1.0, "XX")]).unwrap();
        assert!(sample_bitstrings_expectation(&rho, &xx, 100, 1).is_err());
        let mode = ExecutionMode::SampledBitstrings { shots: 10, seed: 0 };
        assert!(make_executor(NoiseModel::none(), xx, mode).is_err());
    }

    #[test]
    fn executor_examples() {
        let proj = Observable::all_zeros_projector(2);
        let exec = make_executor(NoiseModel::none(), proj, ExecutionMode::Exact).unwrap();
        assert!((exec.evaluate(&bell()).unwrap() - 0.5).abs() < 1e-12);

        let exec = make_executor(NoiseModel::none(), z(), ExecutionMode::Exact).unwrap();
        let x = Circuit::from_gates(1, [Gate::x(0)]).unwrap();
        assert!((exec.evaluate(&x).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(exec.evaluate(&bell()), Err(SimError::DimensionMismatch { .. })));
    }

    #[test]
    fn amplitude_damping_relaxes_excited_state() {
        let x = Circuit::from_gates(1, [Gate::x(0)]).unwrap();
        let rho = simulate(&x, &NoiseModel::amplitude_damping(0.3).unwrap()).unwrap();
        assert!((rho.probability(0) - 0.3).abs() < 1e-14);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn noise_spec_parsing() {
        assert_eq!("none".parse::<NoiseModel>().unwrap(), NoiseModel::none());
        assert_eq!("depolarizing:0.01".parse::<NoiseModel>().unwrap(), NoiseModel::depolarizing(0.01).unwrap());
        assert_eq!("amplitude-damping:0.2".parse::<NoiseModel>().unwrap().to_string(), "amplitude-damping:0.2");
        assert!("depolarizing:1.5".parse::<NoiseModel>().is_err());
        assert!("bitflip:0.1".parse::<NoiseModel>().is_err());
        assert!("depolarizing".parse::<NoiseModel>().is_err());
    }

    #[test]
    fn observable_json() {
        let text = r#"{"terms": [{"coeff": 0.5, "paulis": "ZI"}, {"coeff": -1.25, "paulis": "XY"}]}"#;
        let obs = Observable::from_json(text).unwrap();
        assert_eq!(obs.num_qubits(), 2);
        assert_eq!(Observable::from_json(&obs.to_json()).unwrap(), obs);
        assert!(Observable::from_json(r#"{"terms": [{"coeff": 1, "paulis": "ZA"}]}"#).is_err());
        assert!(
            Observable::from_json(r#"{"terms": [{"coeff": 1, "paulis": "Z"}, {"coeff": 1, "paulis": "ZZ"}]}"#).is_err()
        );
    }
}
