//! Gate-level circuit representation.
//!
//! Circuits are ordered gate lists over a fixed number of qubits, with an
//! optional flag marking that every qubit is measured at the end. Qubit 0 is
//! the most significant bit of a computational-basis index, so the two-qubit
//! state `|q0 q1>` lives at index `2 * q0 + q1`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest register for which dense unitaries and density matrices are built.
pub const MAX_DENSE_QUBITS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("circuit has {found} qubits, dense evaluation is limited to {max}")]
    TooManyQubits { found: usize, max: usize },
    #[error("circuit carries terminal measurements and has no unitary")]
    MeasurementPresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    T,
    Tdg,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
    Swap,
}

impl GateKind {
    pub const ALL: [GateKind; 14] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::Sdg,
        GateKind::T,
        GateKind::Tdg,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cnot,
        GateKind::Cz,
        GateKind::Swap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::Sdg => "SDG",
            GateKind::T => "T",
            GateKind::Tdg => "TDG",
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    pub fn num_qubits(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Local unitary of a gate. Two-qubit matrices index their basis as
/// `2 * b(qubits[0]) + b(qubits[1])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    One([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

/// A named unitary on one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
    params: Vec<f64>,
}

impl Gate {
    /// Builds a gate, checking arity, parameter count and distinct qubits.
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Result<Gate, CircuitError> {
        if qubits.len() != kind.num_qubits() {
            return Err(CircuitError::Validation(format!(
                "{kind} acts on {} qubit(s), got {}",
                kind.num_qubits(),
                qubits.len()
            )));
        }
        if params.len() != kind.num_params() {
            return Err(CircuitError::Validation(format!(
                "{kind} takes {} parameter(s), got {}",
                kind.num_params(),
                params.len()
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(CircuitError::Validation(format!("{kind} qubit indices must be distinct, got {:?}", qubits)));
        }
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(CircuitError::Validation(format!("{kind} has non-finite angle {p}")));
        }
        Ok(Gate { kind, qubits, params })
    }

    fn fixed1(kind: GateKind, q: usize) -> Gate {
        Gate { kind, qubits: vec![q], params: Vec::new() }
    }

    fn rotation(kind: GateKind, q: usize, theta: f64) -> Gate {
        Gate { kind, qubits: vec![q], params: vec![theta] }
    }

    fn fixed2(kind: GateKind, a: usize, b: usize) -> Gate {
        assert_ne!(a, b, "two-qubit gate on a repeated qubit");
        Gate { kind, qubits: vec![a, b], params: Vec::new() }
    }

    pub fn h(q: usize) -> Gate {
        Gate::fixed1(GateKind::H, q)
    }
    pub fn x(q: usize) -> Gate {
        Gate::fixed1(GateKind::X, q)
    }
    pub fn y(q: usize) -> Gate {
        Gate::fixed1(GateKind::Y, q)
    }
    pub fn z(q: usize) -> Gate {
        Gate::fixed1(GateKind::Z, q)
    }
    pub fn s(q: usize) -> Gate {
        Gate::fixed1(GateKind::S, q)
    }
    pub fn sdg(q: usize) -> Gate {
        Gate::fixed1(GateKind::Sdg, q)
    }
    pub fn t(q: usize) -> Gate {
        Gate::fixed1(GateKind::T, q)
    }
    pub fn tdg(q: usize) -> Gate {
        Gate::fixed1(GateKind::Tdg, q)
    }
    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::rotation(GateKind::Rx, q, theta)
    }
    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::rotation(GateKind::Ry, q, theta)
    }
    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::rotation(GateKind::Rz, q, theta)
    }
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::fixed2(GateKind::Cnot, control, target)
    }
    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::fixed2(GateKind::Cz, a, b)
    }
    pub fn swap(a: usize, b: usize) -> Gate {
        Gate::fixed2(GateKind::Swap, a, b)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// The exact inverse within the same gate set.
    pub fn inverse(&self) -> Gate {
        let kind = match self.kind {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::T => GateKind::Tdg,
            GateKind::Tdg => GateKind::T,
            k => k,
        };
        Gate { kind, qubits: self.qubits.clone(), params: self.params.iter().map(|p| -p).collect() }
    }

    pub fn matrix(&self) -> GateMatrix {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let diag = |a: Complex64, b: Complex64| GateMatrix::One([[a, zero], [zero, b]]);
        match self.kind {
            GateKind::H => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                GateMatrix::One([[h, h], [h, -h]])
            }
            GateKind::X => GateMatrix::One([[zero, one], [one, zero]]),
            GateKind::Y => GateMatrix::One([[zero, c(0.0, -1.0)], [c(0.0, 1.0), zero]]),
            GateKind::Z => diag(one, -one),
            GateKind::S => diag(one, c(0.0, 1.0)),
            GateKind::Sdg => diag(one, c(0.0, -1.0)),
            GateKind::T => diag(one, Complex64::from_polar(1.0, FRAC_PI_4)),
            GateKind::Tdg => diag(one, Complex64::from_polar(1.0, -FRAC_PI_4)),
            GateKind::Rx => {
                let (s, co) = (self.params[0] / 2.0).sin_cos();
                GateMatrix::One([[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]])
            }
            GateKind::Ry => {
                let (s, co) = (self.params[0] / 2.0).sin_cos();
                GateMatrix::One([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
            }
            GateKind::Rz => {
                let half = self.params[0] / 2.0;
                diag(Complex64::from_polar(1.0, -half), Complex64::from_polar(1.0, half))
            }
            GateKind::Cnot => GateMatrix::Two([
                [one, zero, zero, zero],
                [zero, one, zero, zero],
                [zero, zero, zero, one],
                [zero, zero, one, zero],
            ]),
            GateKind::Cz => GateMatrix::Two([
                [one, zero, zero, zero],
                [zero, one, zero, zero],
                [zero, zero, one, zero],
                [zero, zero, zero, -one],
            ]),
            GateKind::Swap => GateMatrix::Two([
                [one, zero, zero, zero],
                [zero, zero, one, zero],
                [zero, one, zero, zero],
                [zero, zero, zero, one],
            ]),
        }
    }
}

/// Bit mask of `qubit` inside a basis index of an `n`-qubit register.
#[inline]
pub(crate) fn qubit_mask(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

/// Applies a local operator to a state vector (or any column of an operator).
pub(crate) fn apply_matrix(state: &mut [Complex64], num_qubits: usize, qubits: &[usize], m: &GateMatrix) {
    match m {
        GateMatrix::One(u) => {
            let mask = qubit_mask(num_qubits, qubits[0]);
            for i in 0..state.len() {
                if i & mask != 0 {
                    continue;
                }
                let (a, b) = (state[i], state[i | mask]);
                state[i] = u[0][0] * a + u[0][1] * b;
                state[i | mask] = u[1][0] * a + u[1][1] * b;
            }
        }
        GateMatrix::Two(u) => {
            let hi = qubit_mask(num_qubits, qubits[0]);
            let lo = qubit_mask(num_qubits, qubits[1]);
            for i in 0..state.len() {
                if i & (hi | lo) != 0 {
                    continue;
                }
                let idx = [i, i | lo, i | hi, i | hi | lo];
                let v = idx.map(|k| state[k]);
                for (r, &k) in idx.iter().enumerate() {
                    state[k] = u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3];
                }
            }
        }
    }
}

/// Ordered gate sequence over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    terminal_measurement: bool,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Circuit, CircuitError> {
        if num_qubits == 0 {
            return Err(CircuitError::Validation("num_qubits must be positive".into()));
        }
        Ok(Circuit { num_qubits, gates: Vec::new(), terminal_measurement: false })
    }

    pub fn from_gates(num_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(num_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn with_measurement(mut self, measured: bool) -> Circuit {
        self.terminal_measurement = measured;
        self
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(CircuitError::Validation(format!(
                "gate {} ({}) uses qubit {q} but the circuit has {} qubit(s)",
                self.gates.len(),
                gate.kind,
                self.num_qubits
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Same register and measurement flag, different gates. Gates are assumed
    /// to come from a circuit on the same register.
    pub(crate) fn with_gates(&self, gates: Vec<Gate>) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates, terminal_measurement: self.terminal_measurement }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn terminal_measurement(&self) -> bool {
        self.terminal_measurement
    }

    /// Gates of the adjoint circuit: reversed order, each gate inverted.
    pub fn inverse_gates(&self) -> Vec<Gate> {
        self.gates.iter().rev().map(Gate::inverse).collect()
    }

    pub fn to_json(&self) -> String {
        let raw = RawCircuit {
            num_qubits: self.num_qubits,
            terminal_measurement: self.terminal_measurement,
            gates: self
                .gates
                .iter()
                .map(|g| RawGate { name: g.name().to_string(), qubits: g.qubits.clone(), params: g.params.clone() })
                .collect(),
        };
        serde_json::to_string(&raw).expect("circuit serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Circuit, CircuitError> {
        let raw: RawCircuit = serde_json::from_str(text).map_err(|e| CircuitError::Parse(e.to_string()))?;
        let mut circuit = Circuit::new(raw.num_qubits)?;
        circuit.terminal_measurement = raw.terminal_measurement;
        for (index, g) in raw.gates.into_iter().enumerate() {
            let kind = GateKind::from_name(&g.name)
                .ok_or_else(|| CircuitError::Parse(format!("gates[{index}]: unknown gate name \"{}\"", g.name)))?;
            let gate = Gate::new(kind, g.qubits, g.params).map_err(|e| match e {
                CircuitError::Validation(m) => CircuitError::Validation(format!("gates[{index}]: {m}")),
                other => other,
            })?;
            circuit.push(gate)?;
        }
        Ok(circuit)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    num_qubits: usize,
    terminal_measurement: bool,
    gates: Vec<RawGate>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    name: String,
    qubits: Vec<usize>,
    #[serde(default)]
    params: Vec<f64>,
}

/// Draws a gate uniformly from the gate set (two-qubit kinds only when the
/// register allows), on uniformly chosen distinct qubits, with angles uniform
/// in `[-pi, pi]`.
pub fn random_gate<R: rand::Rng + ?Sized>(rng: &mut R, num_qubits: usize) -> Gate {
    use std::f64::consts::PI;
    let kinds: Vec<GateKind> = GateKind::ALL.iter().copied().filter(|k| k.num_qubits() <= num_qubits).collect();
    let kind = kinds[rng.random_range(0..kinds.len())];
    let a = rng.random_range(0..num_qubits);
    let qubits = if kind.num_qubits() == 2 {
        let mut b = rng.random_range(0..num_qubits - 1);
        if b >= a {
            b += 1;
        }
        vec![a, b]
    } else {
        vec![a]
    };
    let params = (0..kind.num_params()).map(|_| rng.random_range(-PI..=PI)).collect();
    Gate { kind, qubits, params }
}

/// A circuit of `num_gates` independent [`random_gate`] draws.
pub fn random_circuit<R: rand::Rng + ?Sized>(rng: &mut R, num_qubits: usize, num_gates: usize) -> Circuit {
    let gates = (0..num_gates).map(|_| random_gate(rng, num_qubits)).collect();
    Circuit { num_qubits, gates, terminal_measurement: false }
}

/// `depth / 2` random gates followed by their inverses in reverse order, so the
/// circuit composes to the identity. Odd depths are rounded down.
pub fn mirror_circuit<R: rand::Rng + ?Sized>(rng: &mut R, num_qubits: usize, depth: usize) -> Circuit {
    let half = random_circuit(rng, num_qubits, depth / 2);
    let mut gates = half.gates.clone();
    gates.extend(half.inverse_gates());
    Circuit { num_qubits, gates, terminal_measurement: false }
}

/// Dense unitary of a measurement-free circuit, `U = G_k ... G_2 G_1`.
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<Complex64>, CircuitError> {
    if circuit.num_qubits > MAX_DENSE_QUBITS {
        return Err(CircuitError::TooManyQubits { found: circuit.num_qubits, max: MAX_DENSE_QUBITS });
    }
    if circuit.terminal_measurement {
        return Err(CircuitError::MeasurementPresent);
    }
    let dim = 1usize << circuit.num_qubits;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    let n = circuit.num_qubits;
    for gate in &circuit.gates {
        let m = gate.matrix();
        // nalgebra storage is column-major, so each column is a contiguous state
        for mut col in u.column_iter_mut() {
            let slice = col.as_mut_slice();
            apply_matrix(slice, n, &gate.qubits, &m);
        }
    }
    Ok(u)
}

/// Largest entry-wise deviation `max |a_ij - b_ij|`.
/// `max |U - I|` over the entries of the circuit unitary.
pub fn identity_deviation(circuit: &Circuit) -> Result<f64, CircuitError> {
    let u = circuit_unitary(circuit)?;
    let dim = u.nrows();
    Ok(max_abs_diff(&u, &DMatrix::identity(dim, dim)))
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
