//! Exact dense reference evolutions under a target noise model.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{PeaError, Result};
use crate::noise::NoiseLayerModel;
use crate::pauli::PauliString;
use crate::state::{DensityMatrix, PauliMasks, ZERO};

/// Largest register the dense oracles accept.
pub const MAX_ORACLE_QUBITS: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct ReferenceTrace {
    pub points: Vec<TracePoint>,
    /// State after the last recorded step.
    pub final_state: DensityMatrix,
}

impl ReferenceTrace {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn last(&self) -> Option<f64> {
        self.points.last().map(|p| p.value)
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_ORACLE_QUBITS {
        return Err(PeaError::Parameter(format!(
            "dense oracle limited to {MAX_ORACLE_QUBITS} qubits, got {n_qubits}"
        )));
    }
    Ok(())
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(PeaError::Dimension { expected, got });
    }
    Ok(())
}

/// `ρ <- U Λ~[ρ] U†` per layer, `Λ~` only on noisy layers; records `tr(Oρ)`
/// at the end of every time step.
pub fn evolve_channel_composition(
    circuit: &CircuitSpec,
    target: &NoiseLayerModel,
    rho0: &DensityMatrix,
    observable: &PauliString,
) -> Result<ReferenceTrace> {
    let n = circuit.n_qubits();
    check_size(n)?;
    check_dims(n, target.n_qubits())?;
    check_dims(n, rho0.n_qubits())?;
    check_dims(n, observable.n_qubits())?;
    rho0.validate(1e-9)?;

    let mut rho = rho0.clone();
    let mut points = Vec::with_capacity(circuit.n_steps());
    let mut ends = circuit.step_ends().iter().peekable();
    for (l, layer) in circuit.layers().iter().enumerate() {
        if layer.is_noisy() {
            rho = target.apply_channel_to_density(&rho)?;
        }
        for g in &layer.gates {
            rho.apply_gate(g)?;
        }
        if ends.peek() == Some(&&(l + 1)) {
            ends.next();
            points.push(TracePoint { step: points.len() + 1, value: rho.expectation(observable)? });
        }
    }
    Ok(ReferenceTrace { points, final_state: rho })
}

/// Dense matrix of a signed Pauli string.
pub fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    let m = PauliMasks::of(p);
    let dim = 1usize << p.n_qubits();
    let mut out = DMatrix::from_element(dim, dim, ZERO);
    for x in 0..dim {
        out[(x ^ m.flip, x)] = m.coeff(x);
    }
    out
}

/// Continuous-time problem `dρ/dt = -i[H, ρ] + Σ_k γ_k (P_k ρ P_k - ρ)`.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub n_qubits: usize,
    /// `H = Σ c_k P_k`.
    pub hamiltonian: Vec<(f64, PauliString)>,
    /// Pauli jump operators with rates per unit time.
    pub jumps: Vec<(PauliString, f64)>,
}

impl LindbladSpec {
    /// Jumps at `γ = λ~ / Δt` for each channel of a per-layer model applied once per `Δt`.
    pub fn jumps_from_layer_model(model: &NoiseLayerModel, dt: f64) -> Result<Vec<(PauliString, f64)>> {
        if !(dt > 0.0) {
            return Err(PeaError::Parameter(format!("dt must be positive, got {dt}")));
        }
        Ok(model.channels().iter().map(|(p, r)| (p.clone(), r / dt)).collect())
    }

    fn check(&self) -> Result<()> {
        check_size(self.n_qubits)?;
        for (c, p) in &self.hamiltonian {
            check_dims(self.n_qubits, p.n_qubits())?;
            if !c.is_finite() {
                return Err(PeaError::Parameter(format!("non-finite Hamiltonian coefficient {c}")));
            }
        }
        for (p, g) in &self.jumps {
            check_dims(self.n_qubits, p.n_qubits())?;
            if !(*g >= 0.0) || !g.is_finite() {
                return Err(PeaError::Parameter(format!("jump rate must be non-negative, got {g}")));
            }
        }
        Ok(())
    }
}

struct Generator {
    h: DMatrix<Complex64>,
    jumps: Vec<(DMatrix<Complex64>, f64)>,
    total_rate: f64,
}

impl Generator {
    fn new(spec: &LindbladSpec) -> Self {
        let dim = 1usize << spec.n_qubits;
        let mut h = DMatrix::from_element(dim, dim, ZERO);
        for (c, p) in &spec.hamiltonian {
            h += pauli_matrix(p) * Complex64::new(*c, 0.0);
        }
        let jumps: Vec<_> = spec.jumps.iter().filter(|(_, g)| *g > 0.0).map(|(p, g)| (pauli_matrix(p), *g)).collect();
        let total_rate = jumps.iter().map(|(_, g)| g).sum();
        Self { h, jumps, total_rate }
    }

    fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let hr = &self.h * rho;
        // -i(Hρ - ρH) = -i(Hρ - (Hρ)†) for Hermitian ρ and H.
        let mut out = (&hr - hr.adjoint()) * Complex64::new(0.0, -1.0);
        out -= rho * Complex64::new(self.total_rate, 0.0);
        for (p, g) in &self.jumps {
            out += p * rho * p * Complex64::new(*g, 0.0);
        }
        out
    }

    fn rk4(&self, rho: &DMatrix<Complex64>, h: f64) -> DMatrix<Complex64> {
        let c = |v: f64| Complex64::new(v, 0.0);
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + &k1 * c(h / 2.0)));
        let k3 = self.apply(&(rho + &k2 * c(h / 2.0)));
        let k4 = self.apply(&(rho + &k3 * c(h)));
        rho + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0)
    }
}

/// Sum of absolute eigenvalues of the Hermitian part.
pub fn trace_norm(m: &DMatrix<Complex64>) -> f64 {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(herm).eigenvalues.iter().map(|v| v.abs()).sum()
}

/// Per-step tolerance of the step-halving error estimate, in trace norm.
pub const LINDBLAD_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: i32 = 30;

/// Integrates the master equation with RK4 and step halving, recording
/// `tr(Oρ)` at `t_final · k / records` for `k = 1..=records`.
pub fn evolve_continuous_lindblad(
    spec: &LindbladSpec,
    rho0: &DensityMatrix,
    observable: &PauliString,
    t_final: f64,
    dt_integrator: f64,
    records: usize,
) -> Result<ReferenceTrace> {
    spec.check()?;
    check_dims(spec.n_qubits, rho0.n_qubits())?;
    check_dims(spec.n_qubits, observable.n_qubits())?;
    rho0.validate(1e-9)?;
    if !(t_final >= 0.0) || !(dt_integrator > 0.0) || records == 0 {
        return Err(PeaError::Parameter(format!(
            "need t_final >= 0, dt > 0, records > 0; got {t_final}, {dt_integrator}, {records}"
        )));
    }
    let gen = Generator::new(spec);
    let min_step = dt_integrator * 0.5f64.powi(MAX_HALVINGS);
    let mut rho = rho0.matrix().clone();
    let mut points = Vec::with_capacity(records);
    let mut h = dt_integrator;
    let mut t = 0.0;
    for k in 1..=records {
        let t_next = t_final * k as f64 / records as f64;
        while t_next - t > 1e-15 * t_final.max(1.0) {
            let step = h.min(t_next - t);
            let full = gen.rk4(&rho, step);
            let halves = gen.rk4(&gen.rk4(&rho, step / 2.0), step / 2.0);
            let diff = &halves - &full;
            if trace_norm(&diff) <= LINDBLAD_TOLERANCE {
                // Richardson step: cancels the leading h^5 term of the two half steps.
                rho = halves + diff * Complex64::new(1.0 / 15.0, 0.0);
                t += step;
                if step == h {
                    h = (2.0 * h).min(dt_integrator);
                }
            } else {
                h = step / 2.0;
                if h < min_step {
                    return Err(PeaError::Convergence(format!(
                        "Lindblad integrator could not reach tolerance {LINDBLAD_TOLERANCE:e} at t = {t}"
                    )));
                }
            }
        }
        t = t_next;
        let state = DensityMatrix::from_matrix_unchecked(rho.clone());
        points.push(TracePoint { step: k, value: state.expectation(observable)? });
    }
    Ok(ReferenceTrace { points, final_state: DensityMatrix::from_matrix_unchecked(rho) })
}
