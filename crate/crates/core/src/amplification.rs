//! Per-channel noise amplification between a hardware and a target model.
//!
//! Each channel follows its own rate trajectory `λ_eff(G)` chosen so that
//! `G = 1` reproduces what the hardware (plus any injected target channels)
//! does, and `G -> 0` lands on the target rate.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{PeaError, Result};
use crate::noise::{sample_probability, NoiseLayerModel};
use crate::pauli::{propagate_observable, PauliString};
use crate::state::{apply_gate_in_place, apply_pauli_in_place, PauliMasks, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AmplificationCase {
    /// Present in both, target weaker (0 < λ̃ < λ).
    Reduce,
    /// Rates equal.
    Keep,
    /// Present in both, target stronger (λ̃ > λ > 0).
    Raise,
    /// Only in the target (λ = 0 < λ̃).
    Inject,
    /// Only in the hardware (λ̃ = 0 < λ).
    Mitigate,
}

impl AmplificationCase {
    pub fn classify(hardware: f64, target: f64) -> Self {
        if target == hardware {
            AmplificationCase::Keep
        } else if hardware == 0.0 {
            AmplificationCase::Inject
        } else if target == 0.0 {
            AmplificationCase::Mitigate
        } else if target < hardware {
            AmplificationCase::Reduce
        } else {
            AmplificationCase::Raise
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AmplificationCase::Reduce => "REDUCE",
            AmplificationCase::Keep => "KEEP",
            AmplificationCase::Raise => "RAISE",
            AmplificationCase::Inject => "INJECT",
            AmplificationCase::Mitigate => "MITIGATE",
        }
    }
}

impl fmt::Display for AmplificationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Rate sampled into the circuit at gain `gain`.
///
/// REDUCE: `(λ - λ̃) G + λ̃`; KEEP: `λ`; RAISE and INJECT: `λ̃`; MITIGATE: `λ G`.
pub fn effective_rate(case: AmplificationCase, hardware: f64, target: f64, gain: f64) -> f64 {
    let rate = match case {
        AmplificationCase::Reduce => (hardware - target) * gain + target,
        AmplificationCase::Keep => hardware,
        AmplificationCase::Raise | AmplificationCase::Inject => target,
        AmplificationCase::Mitigate => hardware * gain,
    };
    assert!(rate >= 0.0, "negative effective rate {rate} ({case}, λ={hardware}, λ̃={target}, G={gain})");
    rate
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub pauli: PauliString,
    pub case: AmplificationCase,
    #[serde(rename = "lambda")]
    pub hardware_rate: f64,
    #[serde(rename = "lambda_target")]
    pub target_rate: f64,
}

impl PlanEntry {
    pub fn effective_rate(&self, gain: f64) -> f64 {
        effective_rate(self.case, self.hardware_rate, self.target_rate, gain)
    }
}

/// Case assignment for every channel in the union of both models, sorted
/// lexicographically by Pauli label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationPlan {
    n_qubits: usize,
    entries: Vec<PlanEntry>,
}

impl AmplificationPlan {
    pub fn new(hardware: &NoiseLayerModel, target: &NoiseLayerModel) -> Result<Self> {
        if hardware.n_qubits() != target.n_qubits() {
            return Err(PeaError::Dimension { expected: hardware.n_qubits(), got: target.n_qubits() });
        }
        let mut paulis: Vec<PauliString> =
            hardware.channels().iter().chain(target.channels()).map(|(p, _)| p.clone()).collect();
        paulis.sort_by_key(|p| p.to_string());
        paulis.dedup();
        let entries = paulis
            .into_iter()
            .map(|pauli| {
                let (h, t) = (hardware.rate(&pauli), target.rate(&pauli));
                PlanEntry { case: AmplificationCase::classify(h, t), hardware_rate: h, target_rate: t, pauli }
            })
            .collect();
        Ok(Self { n_qubits: hardware.n_qubits(), entries })
    }

    /// Plan that reproduces `model` at every gain.
    pub fn keep(model: &NoiseLayerModel) -> Self {
        Self::new(model, model).expect("same dimensions")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Model with every channel at its effective rate for `gain`.
    pub fn model_at(&self, gain: f64) -> NoiseLayerModel {
        NoiseLayerModel::new(
            self.n_qubits.max(1),
            self.entries.iter().map(|e| (e.pauli.clone(), e.effective_rate(gain))).collect(),
        )
        .expect("plan entries are valid channels")
    }

    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut out = format!("{:<8} {:<9} {:>10} {:>10}\n", "pauli", "case", "lambda", "lambda~");
        for e in &self.entries {
            out.push_str(&format!(
                "{:<8} {:<9} {:>10} {:>10}\n",
                e.pauli.to_string(),
                e.case.label(),
                e.hardware_rate,
                e.target_rate
            ));
        }
        out
    }

    fn check(&self, circuit: &CircuitSpec, observable: &PauliString) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits && !self.entries.is_empty() {
            return Err(PeaError::Dimension { expected: circuit.n_qubits(), got: self.n_qubits });
        }
        if observable.n_qubits() != circuit.n_qubits() {
            return Err(PeaError::Dimension { expected: circuit.n_qubits(), got: observable.n_qubits() });
        }
        Ok(())
    }
}

/// Closed-form noisy expectation of a Clifford circuit started in `|0…0>`.
///
/// Every noisy layer attenuates by `e^{-2 λ_eff(G)}` for each plan channel
/// that anticommutes with the observable as propagated back to that layer.
pub fn predict_noisy_expectation(
    circuit: &CircuitSpec,
    plan: &AmplificationPlan,
    observable: &PauliString,
    gain: f64,
) -> Result<f64> {
    plan.check(circuit, observable)?;
    if !gain.is_finite() || gain < 0.0 {
        return Err(PeaError::Parameter(format!("noise gain must be finite and >= 0, got {gain}")));
    }
    let clifford = circuit.clifford_layers()?;
    let ideal = circuit.run(&StateVector::zero(circuit.n_qubits()))?.expectation(observable)?;
    if clifford.is_empty() {
        return Ok(ideal);
    }
    let seen = propagate_observable(&clifford, observable)?;
    let log_attenuation: f64 = circuit
        .layers()
        .iter()
        .zip(&seen)
        .filter(|(layer, _)| layer.is_noisy())
        .flat_map(|(_, p)| {
            plan.entries.iter().filter(|e| e.pauli.anticommutes_unchecked(p)).map(|e| -2.0 * e.effective_rate(gain))
        })
        .sum();
    Ok(ideal * log_attenuation.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub shots: u64,
}

/// Pairwise summation over a fixed-order slice.
pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Monte-Carlo estimate of the noisy expectation at gain `gain`.
///
/// For every shot each noisy layer independently inserts every plan channel's
/// Pauli with probability `1 - w(λ_eff(G))`, channels in plan order, before the
/// layer's gates; the exact statevector expectation of the shot is recorded.
/// Shot `s` draws from ChaCha8 stream `s` of `seed`, consuming one uniform per
/// (noisy layer, channel), so results do not depend on the thread count and
/// growing `shots` leaves earlier shots untouched.
pub fn sample_noisy_expectation(
    circuit: &CircuitSpec,
    plan: &AmplificationPlan,
    observable: &PauliString,
    gain: f64,
    shots: u64,
    seed: u64,
) -> Result<SampleEstimate> {
    plan.check(circuit, observable)?;
    if shots == 0 {
        return Err(PeaError::Sampling("shots must be at least 1".into()));
    }
    if !(gain >= 1.0) || !gain.is_finite() {
        return Err(PeaError::Sampling(format!("sampling requires a finite gain G >= 1, got {gain}")));
    }
    let insert_probs: Vec<f64> = plan
        .entries
        .iter()
        .map(|e| sample_probability(e.effective_rate(gain)).map(|w| 1.0 - w))
        .collect::<Result<_>>()?;
    let n = circuit.n_qubits();
    let masks = PauliMasks::of(observable);

    let run_shot = |shot: u64| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        let mut psi = StateVector::zero(n);
        for layer in circuit.layers() {
            if layer.is_noisy() {
                for (entry, &p) in plan.entries.iter().zip(&insert_probs) {
                    let u: f64 = rng.random();
                    if u < p {
                        apply_pauli_in_place(psi.amps_mut(), &entry.pauli);
                    }
                }
            }
            for g in &layer.gates {
                apply_gate_in_place(psi.amps_mut(), g);
            }
        }
        psi.expectation_unchecked(&masks)
    };

    let values: Vec<f64> = (0..shots as usize).into_par_iter().with_min_len(256).map(|s| run_shot(s as u64)).collect();
    let count = values.len() as f64;
    let mean = pairwise_sum(&values) / count;
    let stderr = if values.len() > 1 {
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (count - 1.0)).sqrt() / count.sqrt()
    } else {
        0.0
    };
    Ok(SampleEstimate { mean, stderr, shots })
}
