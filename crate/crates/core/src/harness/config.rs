//! Experiment configuration files.
//!
//! ```toml
//! experiment = "scaling"
//! seed = 7
//! budgets = [100, 1000]
//! observable = "ZZ"
//! gains = "optimal"            # or [1.0, 1.2, 1.4, 1.6]
//! hardware_model = "hardware.model"
//! target_model = "target.model"
//!
//! [circuit]
//! kind = "clifford_zz"         # or "tfim"
//! n_qubits = 2
//! dt = 0.2
//! steps = 5
//! ```
//!
//! Model paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::{build_ising_circuit, CircuitSpec, IsingKind, IsingParams};
use crate::error::{PeaError, Result};
use crate::noise::NoiseLayerModel;
use crate::pauli::PauliString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Scaling,
    Tfim,
    Predict,
    Design,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Tfim => "tfim",
            ExperimentKind::Predict => "predict",
            ExperimentKind::Design => "design",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainRule {
    Optimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Rule(GainRule),
    List(Vec<f64>),
}

impl Default for GainSpec {
    fn default() -> Self {
        GainSpec::Rule(GainRule::Optimal)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub kind: IsingKind,
    pub n_qubits: usize,
    /// Coupling; `clifford_zz` defaults to `π / (2 dt)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default)]
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub noise_on_single_qubit_layers: bool,
}

impl CircuitConfig {
    pub fn params(&self) -> Result<IsingParams> {
        let mut params = match self.kind {
            IsingKind::CliffordZz => {
                if self.h != 0.0 {
                    return Err(PeaError::Config("clifford_zz circuits take no transverse field".into()));
                }
                IsingParams::clifford_zz(self.n_qubits, self.dt, self.steps)
            }
            IsingKind::Tfim => {
                let j = self.j.ok_or_else(|| PeaError::Config("tfim circuit needs circuit.j".into()))?;
                IsingParams::tfim(self.n_qubits, j, self.h, self.dt, self.steps)
            }
        };
        if let (IsingKind::CliffordZz, Some(j)) = (self.kind, self.j) {
            params.coupling = j;
        }
        params.noise_on_single_qubit_layers = self.noise_on_single_qubit_layers;
        Ok(params)
    }
}

fn default_repetitions() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub budgets: Vec<u64>,
    pub observable: PauliString,
    #[serde(default)]
    pub gains: GainSpec,
    pub hardware_model: PathBuf,
    pub target_model: PathBuf,
    #[serde(default)]
    pub weighted_fit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub circuit: CircuitConfig,
    /// Directory relative model paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Sets `key` (dotted for sections, e.g. `circuit.steps`) in a TOML table.
/// The value is parsed as TOML and taken as a bare string if that fails.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| PeaError::Config(format!("override {assignment:?} is not key=value")))?;
    let value = parse_value(raw.trim());
    let path: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = path.split_last().expect("split yields at least one item");
    let mut cursor = table;
    for part in parents {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| PeaError::Config(format!("{part} is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| PeaError::Config(e.message().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: ExperimentConfig =
            table.try_into().map_err(|e: toml::de::Error| PeaError::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PeaError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base, overrides)
    }

    fn validate(&self) -> Result<()> {
        let needs_budgets = matches!(self.experiment, ExperimentKind::Scaling | ExperimentKind::Tfim | ExperimentKind::Design);
        if needs_budgets && self.budgets.is_empty() {
            return Err(PeaError::Config("budgets must list at least one shot budget".into()));
        }
        if self.budgets.contains(&0) {
            return Err(PeaError::Config("budgets must be positive".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PeaError::Config("budgets must be strictly increasing".into()));
        }
        if self.repetitions == 0 {
            return Err(PeaError::Config("repetitions must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(PeaError::Config("threads must be positive".into()));
        }
        if let GainSpec::List(g) = &self.gains {
            if g.len() < 2 {
                return Err(PeaError::Config("an extrapolation needs at least two gains".into()));
            }
            if g.iter().any(|v| !(v.is_finite() && *v >= 1.0)) {
                return Err(PeaError::Config("gains must be finite and >= 1".into()));
            }
            let mut sorted = g.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(PeaError::Config("gains must be distinct".into()));
            }
        }
        if self.observable.n_qubits() != self.circuit.n_qubits {
            return Err(PeaError::Config(format!(
                "observable {} does not match circuit.n_qubits = {}",
                self.observable, self.circuit.n_qubits
            )));
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn load_model(&self, p: &Path) -> Result<NoiseLayerModel> {
        let model = NoiseLayerModel::load(&self.resolve(p))?;
        if model.n_qubits() != self.circuit.n_qubits {
            return Err(PeaError::Config(format!(
                "model {} acts on {} qubits, circuit has {}",
                p.display(),
                model.n_qubits(),
                self.circuit.n_qubits
            )));
        }
        Ok(model)
    }

    pub fn hardware(&self) -> Result<NoiseLayerModel> {
        self.load_model(&self.hardware_model)
    }

    pub fn target(&self) -> Result<NoiseLayerModel> {
        self.load_model(&self.target_model)
    }

    /// Circuit with the hardware model attached to its noisy layers.
    pub fn build_circuit(&self, hardware: &NoiseLayerModel) -> Result<CircuitSpec> {
        let params = self.circuit.params()?;
        build_ising_circuit(&params, Arc::new(hardware.clone())).map_err(|e| match e {
            PeaError::Parameter(m) => PeaError::Config(m),
            other => other,
        })
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form of the
    /// experiment definition: the config without `output_dir` and `threads`,
    /// with model paths replaced by the model contents.
    pub fn config_hash(&self) -> Result<String> {
        let mut canon = self.clone();
        canon.output_dir = None;
        canon.threads = None;
        let mut value = serde_json::to_value(&canon)?;
        let obj = value.as_object_mut().expect("config serializes to an object");
        obj.insert("hardware_model".into(), serde_json::Value::String(self.hardware()?.to_toml_string()));
        obj.insert("target_model".into(), serde_json::Value::String(self.target()?.to_toml_string()));
        let digest = Sha256::digest(serde_json::to_vec(&value)?);
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "scaling"
budgets = [100, 1000]
observable = "ZZ"
hardware_model = "h.model"
target_model = "t.model"

[circuit]
kind = "clifford_zz"
n_qubits = 2
dt = 0.2
steps = 5
"#;

    fn parse(text: &str, overrides: &[&str]) -> Result<ExperimentConfig> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        ExperimentConfig::from_toml_str(text, Path::new("."), &o)
    }

    #[test]
    fn defaults() {
        let cfg = parse(BASE, &[]).unwrap();
        assert_eq!(cfg.repetitions, 20);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.gains, GainSpec::Rule(GainRule::Optimal));
        assert!(!cfg.weighted_fit);
        let p = cfg.circuit.params().unwrap();
        assert!((p.coupling - std::f64::consts::PI / 0.4).abs() < 1e-12);
    }

    #[test]
    fn overrides() {
        let cfg = parse(BASE, &["seed=9", "circuit.steps = 3", "gains=[1.0, 2.0]", "observable=ZI"]).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.circuit.steps, 3);
        assert_eq!(cfg.gains, GainSpec::List(vec![1.0, 2.0]));
        assert_eq!(cfg.observable.to_string(), "ZI");
        assert!(parse(BASE, &["seed"]).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        for o in [
            "budgets=[]",
            "budgets=[100, 100]",
            "budgets=[1000, 100]",
            "gains=[1.0]",
            "gains=[1.0, 1.0]",
            "gains=[0.5, 1.0]",
            "repetitions=0",
            "observable=ZZZ",
            "bogus=1",
            "experiment=\"other\"",
        ] {
            assert!(matches!(parse(BASE, &[o]), Err(PeaError::Config(_))), "{o}");
        }
        assert!(matches!(parse("not toml [", &[]), Err(PeaError::Config(_))));
    }

    #[test]
    fn override_value_parsing() {
        assert_eq!(parse_value("3"), toml::Value::Integer(3));
        assert_eq!(parse_value("true"), toml::Value::Boolean(true));
        assert_eq!(parse_value("XX"), toml::Value::String("XX".into()));
        assert_eq!(parse_value("\"a b\""), toml::Value::String("a b".into()));
    }
}
