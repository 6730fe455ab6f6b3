//! Sparse Pauli-Lindblad noise layers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PeaError, Result};
use crate::pauli::PauliString;
use crate::state::DensityMatrix;

/// Probability `w = (1 + e^{-2λ}) / 2` of *not* inserting a channel's Pauli.
pub fn sample_probability(rate: f64) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(PeaError::Domain(format!("Pauli rate must be non-negative, got {rate}")));
    }
    Ok(0.5 * (1.0 + (-2.0 * rate).exp()))
}

/// Weight-1 and weight-2 Pauli channels with non-negative rates.
///
/// Channels keep their insertion order; zero rates are retained so that a
/// model read from a file serializes back unchanged.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseLayerModel {
    n_qubits: usize,
    channels: Vec<(PauliString, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelRecord {
    pauli: PauliString,
    rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_qubits: Option<usize>,
    #[serde(default, rename = "channel")]
    channels: Vec<ChannelRecord>,
}

impl NoiseLayerModel {
    pub fn empty(n_qubits: usize) -> Self {
        Self { n_qubits, channels: Vec::new() }
    }

    pub fn new(n_qubits: usize, channels: Vec<(PauliString, f64)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(PeaError::NoiseModel("model needs at least one qubit".into()));
        }
        let mut model = Self::empty(n_qubits);
        for (p, rate) in channels {
            model.insert(p, rate)?;
        }
        Ok(model)
    }

    /// Convenience constructor from textual Pauli labels.
    pub fn from_pairs(n_qubits: usize, pairs: &[(&str, f64)]) -> Result<Self> {
        let channels = pairs
            .iter()
            .map(|(s, r)| Ok((s.parse::<PauliString>()?, *r)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_qubits, channels)
    }

    fn insert(&mut self, p: PauliString, rate: f64) -> Result<()> {
        if p.n_qubits() != self.n_qubits {
            return Err(PeaError::Dimension { expected: self.n_qubits, got: p.n_qubits() });
        }
        if p.is_negative() {
            return Err(PeaError::NoiseModel(format!("channel {p} must carry a positive sign")));
        }
        if !matches!(p.weight(), 1 | 2) {
            return Err(PeaError::NoiseModel(format!("channel {p} has weight {}, expected 1 or 2", p.weight())));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(PeaError::NoiseModel(format!("channel {p} has invalid rate {rate}")));
        }
        if self.channels.iter().any(|(q, _)| *q == p) {
            return Err(PeaError::NoiseModel(format!("duplicate channel {p}")));
        }
        self.channels.push((p, rate));
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn channels(&self) -> &[(PauliString, f64)] {
        &self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.channels.iter().any(|(q, _)| q == p)
    }

    /// Rate of channel `p`, zero when absent.
    pub fn rate(&self, p: &PauliString) -> f64 {
        self.channels.iter().find(|(q, _)| q == p).map_or(0.0, |(_, r)| *r)
    }

    fn check(&self, observable: &PauliString) -> Result<()> {
        if observable.n_qubits() != self.n_qubits {
            return Err(PeaError::Dimension { expected: self.n_qubits, got: observable.n_qubits() });
        }
        Ok(())
    }

    /// `ln f = -2 Σ λ` over channels anticommuting with `observable`.
    pub fn log_fidelity(&self, observable: &PauliString) -> Result<f64> {
        self.check(observable)?;
        Ok(self
            .channels
            .iter()
            .filter(|(p, _)| p.anticommutes_unchecked(observable))
            .map(|(_, r)| -2.0 * r)
            .sum())
    }

    /// Pauli fidelity: the eigenvalue of the channel on `observable`.
    pub fn pauli_fidelity(&self, observable: &PauliString) -> Result<f64> {
        self.log_fidelity(observable).map(f64::exp)
    }

    /// Applies `ρ -> w ρ + (1 - w) P ρ P` for every channel in turn, which
    /// equals the exponential of the Lindblad-form generator.
    pub fn apply_channel_to_density(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.n_qubits {
            return Err(PeaError::Dimension { expected: self.n_qubits, got: rho.n_qubits() });
        }
        let mut out = rho.clone();
        for (p, rate) in &self.channels {
            if *rate == 0.0 {
                continue;
            }
            let w = sample_probability(*rate)?;
            let flipped = out.conjugate_by_pauli(p)?;
            out.scale_add(w, &flipped, 1.0 - w);
        }
        Ok(out)
    }

    /// Parses the structured-text model format.
    ///
    /// ```toml
    /// [[channel]]
    /// pauli = "XI"
    /// rate = 0.05
    /// ```
    ///
    /// An optional top-level `n_qubits` is required only for an empty model.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| PeaError::NoiseModel(e.to_string()))?;
        Self::from_file_repr(file)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| PeaError::NoiseModel(e.to_string()))?;
        Self::from_file_repr(file)
    }

    fn from_file_repr(file: ModelFile) -> Result<Self> {
        let n = match (file.n_qubits, file.channels.first()) {
            (Some(n), _) => n,
            (None, Some(c)) => c.pauli.n_qubits(),
            (None, None) => return Err(PeaError::NoiseModel("empty model must declare n_qubits".into())),
        };
        Self::new(n, file.channels.into_iter().map(|c| (c.pauli, c.rate)).collect())
    }

    /// Reads a model file; `.json` files are parsed as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PeaError::Config(format!("cannot read model {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| PeaError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        let file = ModelFile {
            n_qubits: Some(self.n_qubits),
            channels: self.channels.iter().map(|(p, r)| ChannelRecord { pauli: p.clone(), rate: *r }).collect(),
        };
        toml::to_string(&file).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::state::StateVector;
    use approx::assert_abs_diff_eq;

    fn hardware() -> NoiseLayerModel {
        NoiseLayerModel::from_pairs(
            2,
            &[("XI", 0.05), ("YI", 0.07), ("ZI", 0.01), ("XX", 0.06), ("YX", 0.07), ("ZX", 0.03)],
        )
        .unwrap()
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(NoiseLayerModel::empty(2).pauli_fidelity(&ps("XY")).unwrap(), 1.0);
        let single = NoiseLayerModel::from_pairs(2, &[("XI", 0.05)]).unwrap();
        assert_abs_diff_eq!(single.pauli_fidelity(&ps("ZZ")).unwrap(), 0.904837418035960, epsilon = 1e-12);
        assert_abs_diff_eq!(hardware().pauli_fidelity(&ps("ZZ")).unwrap(), (-0.30f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(hardware().pauli_fidelity(&ps("ZZ")).unwrap(), 0.740818220681718, epsilon = 1e-12);
        assert!(hardware().pauli_fidelity(&ps("Z")).is_err());
    }

    #[test]
    fn sample_probability_examples() {
        assert_eq!(sample_probability(0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(sample_probability(1e3).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sample_probability(0.05).unwrap(), 0.952418709017980, epsilon = 1e-12);
        assert!(matches!(sample_probability(-1e-3), Err(PeaError::Domain(_))));
        assert!(sample_probability(f64::NAN).is_err());
    }

    #[test]
    fn construction_rules() {
        assert!(NoiseLayerModel::from_pairs(3, &[("XYZ", 0.1)]).is_err());
        assert!(NoiseLayerModel::from_pairs(2, &[("II", 0.1)]).is_err());
        assert!(NoiseLayerModel::from_pairs(2, &[("XI", -0.1)]).is_err());
        assert!(NoiseLayerModel::from_pairs(2, &[("XI", 0.1), ("XI", 0.2)]).is_err());
        assert!(NoiseLayerModel::from_pairs(2, &[("-XI", 0.1)]).is_err());
        assert!(NoiseLayerModel::from_pairs(2, &[("XIZ", 0.1)]).is_err());
        let m = NoiseLayerModel::from_pairs(2, &[("YY", 0.0)]).unwrap();
        assert!(m.contains(&ps("YY")));
        assert_eq!(m.pauli_fidelity(&ps("ZX")).unwrap(), 1.0);
    }

    #[test]
    fn dephasing_on_plus_state() {
        let lambda = 0.2;
        let m = NoiseLayerModel::from_pairs(1, &[("Z", lambda)]).unwrap();
        let mut psi = StateVector::zero(1);
        psi.apply_gate(&Gate::H(0)).unwrap();
        let rho = DensityMatrix::from_state(&psi);
        let out = m.apply_channel_to_density(&rho).unwrap();
        assert_abs_diff_eq!(out.matrix()[(0, 1)].re, 0.5 * (-2.0 * lambda).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(out.matrix()[(0, 0)].re, 0.5, epsilon = 1e-14);
        assert_eq!(NoiseLayerModel::empty(1).apply_channel_to_density(&rho).unwrap(), rho);
    }

    #[test]
    fn toml_round_trip_keeps_zero_rates() {
        let text = r#"
            [[channel]]
            pauli = "XI"
            rate = 0.05
            [[channel]]
            pauli = "YY"
            rate = 0.0
        "#;
        let m = NoiseLayerModel::from_toml_str(text).unwrap();
        assert_eq!(m.channels().len(), 2);
        let back = NoiseLayerModel::from_toml_str(&m.to_toml_string()).unwrap();
        assert_eq!(back, m);
        assert!(NoiseLayerModel::from_toml_str("").is_err());
        assert!(NoiseLayerModel::from_toml_str("n_qubits = 2").unwrap().is_empty());
        let json = r#"{"channel": [{"pauli": "ZI", "rate": 0.01}]}"#;
        assert_eq!(NoiseLayerModel::from_json_str(json).unwrap().rate(&ps("ZI")), 0.01);
    }

    #[test]
    fn fidelity_multiplicative_over_disjoint_union() {
        let a = NoiseLayerModel::from_pairs(2, &[("XI", 0.05), ("ZX", 0.03)]).unwrap();
        let b = NoiseLayerModel::from_pairs(2, &[("YI", 0.07), ("XX", 0.06)]).unwrap();
        let union = NoiseLayerModel::new(2, a.channels().iter().chain(b.channels()).cloned().collect()).unwrap();
        for obs in ["ZZ", "XY", "YI", "IZ"] {
            let o = ps(obs);
            assert_abs_diff_eq!(
                union.pauli_fidelity(&o).unwrap(),
                a.pauli_fidelity(&o).unwrap() * b.pauli_fidelity(&o).unwrap(),
                epsilon = 1e-15
            );
        }
    }
}
