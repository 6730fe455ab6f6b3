//! Layered circuits and the Ising time-evolution builders.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PeaError, Result};
use crate::noise::NoiseLayerModel;
use crate::pauli::{CliffordGate, Pauli, PauliString};
use crate::state::StateVector;

/// Angles within this distance of a multiple of π are treated as Clifford.
const ANGLE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rx { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    Rzz { a: usize, b: usize, theta: f64 },
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    S(usize),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
}

/// Outcome of classifying a gate for Heisenberg propagation.
#[derive(Clone, Debug, PartialEq)]
pub enum CliffordForm {
    Identity,
    Gate(CliffordGate),
    NotClifford,
}

/// Multiples of π: Some(0) for even, Some(1) for odd, None otherwise.
fn half_turns(theta: f64) -> Option<u8> {
    let r = theta.rem_euclid(TAU);
    if r < ANGLE_TOL || TAU - r < ANGLE_TOL {
        Some(0)
    } else if (r - PI).abs() < ANGLE_TOL {
        Some(1)
    } else {
        None
    }
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => vec![qubit],
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) => vec![q],
            Gate::Rzz { a, b, .. } | Gate::Cz(a, b) => vec![a, b],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub(crate) fn check(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n_qubits {
                return Err(PeaError::QubitIndex { index: q, n_qubits });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(PeaError::Parameter(format!("two-qubit gate on repeated qubit {}", qs[0])));
        }
        match *self {
            Gate::Rx { theta, .. } | Gate::Rz { theta, .. } | Gate::Rzz { theta, .. } if !theta.is_finite() => {
                Err(PeaError::Parameter(format!("non-finite rotation angle {theta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn clifford_form(&self, n_qubits: usize) -> CliffordForm {
        let half_turn = |theta: f64, terms: &[(usize, Pauli)]| match half_turns(theta) {
            Some(0) => CliffordForm::Identity,
            Some(_) => CliffordForm::Gate(CliffordGate::PauliExpHalfTurn(
                PauliString::from_sparse(n_qubits, terms).expect("gate checked against register"),
            )),
            None => CliffordForm::NotClifford,
        };
        match *self {
            Gate::Rx { qubit, theta } => half_turn(theta, &[(qubit, Pauli::X)]),
            Gate::Rz { qubit, theta } => half_turn(theta, &[(qubit, Pauli::Z)]),
            Gate::Rzz { a, b, theta } => half_turn(theta, &[(a, Pauli::Z), (b, Pauli::Z)]),
            Gate::H(q) => CliffordForm::Gate(CliffordGate::H(q)),
            Gate::X(q) => CliffordForm::Gate(CliffordGate::X(q)),
            Gate::Y(q) => CliffordForm::Gate(CliffordGate::Y(q)),
            Gate::Z(q) => CliffordForm::Gate(CliffordGate::Z(q)),
            Gate::S(q) => CliffordForm::Gate(CliffordGate::S(q)),
            Gate::Cnot { control, target } => CliffordForm::Gate(CliffordGate::Cnot { control, target }),
            Gate::Cz(a, b) => CliffordForm::Gate(CliffordGate::Cz(a, b)),
        }
    }
}

/// One unitary layer, optionally preceded by a noise channel.
///
/// Layers that carry the same model share it through the `Arc`.
#[derive(Clone, Debug)]
pub struct Layer {
    pub gates: Vec<Gate>,
    pub noise: Option<Arc<NoiseLayerModel>>,
}

impl Layer {
    pub fn new(gates: Vec<Gate>, noise: Option<Arc<NoiseLayerModel>>) -> Self {
        Self { gates, noise }
    }

    pub fn is_noisy(&self) -> bool {
        self.noise.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct CircuitSpec {
    n_qubits: usize,
    layers: Vec<Layer>,
    /// Exclusive end index into `layers` for each time step.
    step_ends: Vec<usize>,
}

impl CircuitSpec {
    /// Builds a circuit where every layer is its own step.
    pub fn new(n_qubits: usize, layers: Vec<Layer>) -> Result<Self> {
        let step_ends = (1..=layers.len()).collect();
        Self::with_steps(n_qubits, layers, step_ends)
    }

    pub fn with_steps(n_qubits: usize, layers: Vec<Layer>, step_ends: Vec<usize>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(PeaError::Parameter("circuit needs at least one qubit".into()));
        }
        for (l, layer) in layers.iter().enumerate() {
            let mut used = vec![false; n_qubits];
            for g in &layer.gates {
                g.check(n_qubits)?;
                for q in g.qubits() {
                    if used[q] {
                        return Err(PeaError::Parameter(format!("layer {l}: qubit {q} used by two gates")));
                    }
                    used[q] = true;
                }
            }
            if let Some(model) = &layer.noise {
                if model.n_qubits() != n_qubits {
                    return Err(PeaError::Dimension { expected: n_qubits, got: model.n_qubits() });
                }
            }
        }
        let monotone = step_ends.windows(2).all(|w| w[0] < w[1]);
        if !monotone || step_ends.last().copied().unwrap_or(0) != layers.len() || step_ends.first() == Some(&0) {
            return Err(PeaError::Parameter("step boundaries must partition the layers".into()));
        }
        Ok(Self { n_qubits, layers, step_ends })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn n_steps(&self) -> usize {
        self.step_ends.len()
    }

    pub fn step_ends(&self) -> &[usize] {
        &self.step_ends
    }

    /// Circuit made of the first `steps` time steps.
    pub fn truncated(&self, steps: usize) -> Result<CircuitSpec> {
        if steps == 0 || steps > self.n_steps() {
            return Err(PeaError::Parameter(format!("cannot truncate {} steps to {steps}", self.n_steps())));
        }
        let end = self.step_ends[steps - 1];
        Self::with_steps(self.n_qubits, self.layers[..end].to_vec(), self.step_ends[..steps].to_vec())
    }

    /// Replaces every noise attachment with `model`, keeping the noisy-layer pattern.
    pub fn with_noise(&self, model: Arc<NoiseLayerModel>) -> Result<CircuitSpec> {
        let layers = self
            .layers
            .iter()
            .map(|l| Layer::new(l.gates.clone(), l.noise.as_ref().map(|_| model.clone())))
            .collect();
        Self::with_steps(self.n_qubits, layers, self.step_ends.clone())
    }

    /// Clifford gates per layer, or an error naming the first non-Clifford gate.
    pub fn clifford_layers(&self) -> Result<Vec<Vec<CliffordGate>>> {
        self.layers
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                let mut out = Vec::new();
                for g in &layer.gates {
                    match g.clifford_form(self.n_qubits) {
                        CliffordForm::Identity => {}
                        CliffordForm::Gate(c) => out.push(c),
                        CliffordForm::NotClifford => {
                            return Err(PeaError::NotClifford(format!("layer {l} contains {g:?}")));
                        }
                    }
                }
                Ok(out)
            })
            .collect()
    }

    pub fn is_clifford(&self) -> bool {
        self.clifford_layers().is_ok()
    }

    /// Ideal (noise-free) evolution of `psi`.
    pub fn run(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.n_qubits() != self.n_qubits {
            return Err(PeaError::Dimension { expected: self.n_qubits, got: psi.n_qubits() });
        }
        let mut out = psi.clone();
        for layer in &self.layers {
            for g in &layer.gates {
                out.apply_gate(g)?;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsingKind {
    /// `H = -J Σ Z_i Z_{i+1}` at the Clifford point `J = π / (2 Δt)`.
    CliffordZz,
    /// Transverse-field Ising model, first-order Trotterized.
    Tfim,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub kind: IsingKind,
    pub n_qubits: usize,
    pub coupling: f64,
    pub field: f64,
    pub dt: f64,
    pub steps: usize,
    /// TFIM only: also attach noise to the single-qubit RX layers.
    pub noise_on_single_qubit_layers: bool,
}

impl IsingParams {
    pub fn clifford_zz(n_qubits: usize, dt: f64, steps: usize) -> Self {
        Self {
            kind: IsingKind::CliffordZz,
            n_qubits,
            coupling: PI / (2.0 * dt),
            field: 0.0,
            dt,
            steps,
            noise_on_single_qubit_layers: false,
        }
    }

    pub fn tfim(n_qubits: usize, coupling: f64, field: f64, dt: f64, steps: usize) -> Self {
        Self { kind: IsingKind::Tfim, n_qubits, coupling, field, dt, steps, noise_on_single_qubit_layers: false }
    }
}

/// Nearest-neighbour RZZ gates of an open chain, split into layers of
/// disjoint bonds (even bonds first).
fn zz_bond_layers(n: usize, theta: f64) -> Vec<Vec<Gate>> {
    let even: Vec<Gate> = (0..n.saturating_sub(1)).step_by(2).map(|a| Gate::Rzz { a, b: a + 1, theta }).collect();
    let odd: Vec<Gate> = (1..n.saturating_sub(1)).step_by(2).map(|a| Gate::Rzz { a, b: a + 1, theta }).collect();
    [even, odd].into_iter().filter(|l| !l.is_empty()).collect()
}

/// Builds the Ising time-evolution circuit.
///
/// Each step is `RZZ(-2JΔt)` on every chain bond, followed for the TFIM by
/// `RX(-2hΔt)` on every qubit. The noise model precedes the first two-qubit
/// layer of each step (and the RX layer too when requested).
pub fn build_ising_circuit(params: &IsingParams, noise: Arc<NoiseLayerModel>) -> Result<CircuitSpec> {
    let IsingParams { kind, n_qubits, coupling, field, dt, steps, .. } = *params;
    if steps == 0 {
        return Err(PeaError::Parameter("n_steps must be at least 1".into()));
    }
    if n_qubits < 2 {
        return Err(PeaError::Parameter("Ising chain needs at least two qubits".into()));
    }
    if !(dt > 0.0) || !dt.is_finite() || !coupling.is_finite() || !field.is_finite() {
        return Err(PeaError::Parameter(format!("invalid J={coupling}, h={field}, dt={dt}")));
    }
    if kind == IsingKind::CliffordZz {
        let clifford_j = PI / (2.0 * dt);
        if (coupling - clifford_j).abs() > 1e-9 * clifford_j {
            return Err(PeaError::Parameter(format!(
                "clifford_zz requires J = π/(2Δt) = {clifford_j}, got {coupling}"
            )));
        }
    }
    let theta_j = -2.0 * coupling * dt;
    let theta_h = -2.0 * field * dt;

    let mut layers = Vec::new();
    let mut step_ends = Vec::with_capacity(steps);
    for _ in 0..steps {
        for (k, gates) in zz_bond_layers(n_qubits, theta_j).into_iter().enumerate() {
            layers.push(Layer::new(gates, (k == 0).then(|| noise.clone())));
        }
        if kind == IsingKind::Tfim {
            let rx = (0..n_qubits).map(|qubit| Gate::Rx { qubit, theta: theta_h }).collect();
            layers.push(Layer::new(rx, params.noise_on_single_qubit_layers.then(|| noise.clone())));
        }
        step_ends.push(layers.len());
    }
    CircuitSpec::with_steps(n_qubits, layers, step_ends)
}
