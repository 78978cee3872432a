//! Noise scaling by unitary folding.
//!
//! Folding a gate `G` replaces it with `G G^dagger G`: the ideal action is
//! unchanged while the physical gate count (and therefore the accumulated
//! noise) grows. A scale factor `lambda` asks for roughly `lambda * d` gates
//! out of a circuit of `d` gates: `m = floor((lambda - 1) / 2)` whole passes
//! fold every gate, then a partial pass folds `s = round(d * (lambda - 1 - 2m) / 2)`
//! more (ties round up).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};

// Absorbs representation error in `d * r / 2` so exact half-way cases round up.
const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("cannot fold an empty circuit")]
    EmptyCircuit,
    #[error("scale factor must be a finite number >= 1, got {0}")]
    InvalidScaleFactor(f64),
    #[error("gate fidelity must lie in (0, 1], got {0}")]
    InvalidFidelity(f64),
}

/// Order in which local folding picks gates for a partial pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldStrategy {
    FromLeft,
    FromRight,
    AtRandom { seed: u64 },
}

/// Known or estimated gate fidelities used to weight local folding.
///
/// A gate's weight is `1 - f`. Lookup order: exact gate on qubits, gate name,
/// then the single/two-qubit default. Gates with no entry at all get weight 1,
/// the same as unweighted folding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateFidelities {
    on_qubits: BTreeMap<(GateKind, Vec<usize>), f64>,
    by_kind: BTreeMap<GateKind, f64>,
    single: Option<f64>,
    double: Option<f64>,
}

fn check_fidelity(f: f64) -> Result<f64, ScalingError> {
    if f > 0.0 && f <= 1.0 {
        Ok(f)
    } else {
        Err(ScalingError::InvalidFidelity(f))
    }
}

impl GateFidelities {
    pub fn new() -> GateFidelities {
        GateFidelities::default()
    }

    pub fn with_kind(mut self, kind: GateKind, fidelity: f64) -> Result<Self, ScalingError> {
        self.by_kind.insert(kind, check_fidelity(fidelity)?);
        Ok(self)
    }

    pub fn with_gate_on(mut self, kind: GateKind, qubits: Vec<usize>, fidelity: f64) -> Result<Self, ScalingError> {
        self.on_qubits.insert((kind, qubits), check_fidelity(fidelity)?);
        Ok(self)
    }

    pub fn with_single_qubit_default(mut self, fidelity: f64) -> Result<Self, ScalingError> {
        self.single = Some(check_fidelity(fidelity)?);
        Ok(self)
    }

    pub fn with_two_qubit_default(mut self, fidelity: f64) -> Result<Self, ScalingError> {
        self.double = Some(check_fidelity(fidelity)?);
        Ok(self)
    }

    pub fn fidelity(&self, gate: &Gate) -> Option<f64> {
        self.on_qubits
            .get(&(gate.kind(), gate.qubits().to_vec()))
            .or_else(|| self.by_kind.get(&gate.kind()))
            .copied()
            .or(if gate.qubits().len() == 1 { self.single } else { self.double })
    }

    pub fn weight(&self, gate: &Gate) -> f64 {
        self.fidelity(gate).map_or(1.0, |f| 1.0 - f)
    }
}

/// A folded circuit plus how many times each original gate was folded.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub circuit: Circuit,
    pub fold_counts: Vec<usize>,
}

impl FoldOutcome {
    /// Gate count of the folded circuit over that of the original.
    pub fn achieved_scale(&self) -> f64 {
        self.circuit.len() as f64 / self.fold_counts.len() as f64
    }
}

fn check_inputs(circuit: &Circuit, scale_factor: f64) -> Result<(), ScalingError> {
    if circuit.is_empty() {
        return Err(ScalingError::EmptyCircuit);
    }
    if !scale_factor.is_finite() || scale_factor < 1.0 {
        return Err(ScalingError::InvalidScaleFactor(scale_factor));
    }
    Ok(())
}

/// `(m, s)`: whole folding passes and extra single folds for `foldable` gates.
pub fn fold_plan(foldable: usize, scale_factor: f64) -> (usize, usize) {
    let m = ((scale_factor - 1.0) / 2.0).floor();
    let rest = scale_factor - 1.0 - 2.0 * m;
    let s = (foldable as f64 * rest / 2.0 + 0.5 + TIE_EPS).floor() as usize;
    (m as usize, s.min(foldable))
}

/// Local folding; see [`fold_local_with_ledger`].
pub fn fold_local(
    circuit: &Circuit,
    scale_factor: f64,
    strategy: FoldStrategy,
    fidelities: Option<&GateFidelities>,
) -> Result<Circuit, ScalingError> {
    fold_local_with_ledger(circuit, scale_factor, strategy, fidelities).map(|o| o.circuit)
}

/// Folds individual gates until the target scale is reached.
///
/// Without fidelities every gate has weight 1 and the folded circuit has
/// `d + 2(m d + s)` gates. With fidelities, gates of fidelity exactly 1 are
/// never folded and the partial pass aims at a folded weight of
/// `(lambda - 1) / 2` times the total weight.
pub fn fold_local_with_ledger(
    circuit: &Circuit,
    scale_factor: f64,
    strategy: FoldStrategy,
    fidelities: Option<&GateFidelities>,
) -> Result<FoldOutcome, ScalingError> {
    check_inputs(circuit, scale_factor)?;
    let weights: Vec<f64> = match fidelities {
        Some(f) => circuit.gates().iter().map(|g| f.weight(g)).collect(),
        None => vec![1.0; circuit.len()],
    };
    let foldable: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let total: f64 = foldable.iter().map(|&i| weights[i]).sum();

    let (whole, _) = fold_plan(foldable.len(), scale_factor);
    let mut counts = vec![0usize; circuit.len()];
    for &i in &foldable {
        counts[i] = whole;
    }

    let mut order = foldable;
    match strategy {
        FoldStrategy::FromLeft => {}
        FoldStrategy::FromRight => order.reverse(),
        FoldStrategy::AtRandom { seed } => order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }

    let remaining = ((scale_factor - 1.0) / 2.0 - whole as f64) * total;
    let tol = TIE_EPS * total.max(1.0);
    let mut folded = 0.0;
    for &i in &order {
        if folded >= remaining - tol {
            break;
        }
        let w = weights[i];
        // keep the gate only if it moves the folded weight closer to target
        if (folded + w - remaining) <= (remaining - folded) + tol {
            counts[i] += 1;
            folded += w;
        } else {
            break;
        }
    }

    let mut gates = Vec::with_capacity(circuit.len() + 2 * counts.iter().sum::<usize>());
    for (gate, &k) in circuit.gates().iter().zip(&counts) {
        gates.push(gate.clone());
        let inv = gate.inverse();
        for _ in 0..k {
            gates.push(inv.clone());
            gates.push(gate.clone());
        }
    }
    Ok(FoldOutcome { circuit: circuit.with_gates(gates), fold_counts: counts })
}

/// Folds the whole circuit: `C (C^dagger C)^m`, then the last `s` gates are
/// folded as one block by appending the inverse of that suffix and the suffix.
pub fn fold_global(circuit: &Circuit, scale_factor: f64) -> Result<Circuit, ScalingError> {
    check_inputs(circuit, scale_factor)?;
    let d = circuit.len();
    let (whole, partial) = fold_plan(d, scale_factor);
    let inverse = circuit.inverse_gates();
    let mut gates = Vec::with_capacity(d + 2 * (whole * d + partial));
    gates.extend_from_slice(circuit.gates());
    for _ in 0..whole {
        gates.extend_from_slice(&inverse);
        gates.extend_from_slice(circuit.gates());
    }
    if partial > 0 {
        gates.extend_from_slice(&inverse[..partial]);
        gates.extend_from_slice(&circuit.gates()[d - partial..]);
    }
    Ok(circuit.with_gates(gates))
}
