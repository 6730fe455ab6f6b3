//! Python bindings for `pea_core`.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pea_core::design as core_design;
use pea_core::{
    build_ising_circuit, evolve_channel_composition, extrapolate, fit_log_linear_with, predict_noisy_expectation,
    sample_noisy_expectation, AmplificationPlan, CircuitSpec, DensityMatrix, FitOptions, GainPoint, GainSeries,
    IsingParams, NoiseLayerModel, PeaError,
};

fn err(e: PeaError) -> PyErr {
    match e {
        PeaError::SignalLost { .. }
        | PeaError::SignInconsistent
        | PeaError::Convergence(_)
        | PeaError::NotClifford(_)
        | PeaError::ImaginaryPhase
        | PeaError::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn pauli(text: &str) -> PyResult<pea_core::PauliString> {
    text.parse().map_err(err)
}

#[pyclass(name = "PauliString", module = "pea", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPauliString(pea_core::PauliString);

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        pauli(text).map(Self)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn weight(&self) -> usize {
        self.0.weight()
    }

    fn anticommutes(&self, other: &Self) -> PyResult<bool> {
        self.0.anticommutes(&other.0).map_err(err)
    }

    fn __mul__(&self, other: &Self) -> PyResult<Self> {
        self.0.product(&other.0).map(Self).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.0)
    }
}

#[pyclass(name = "NoiseModel", module = "pea", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyNoiseModel(NoiseLayerModel);

#[pymethods]
impl PyNoiseModel {
    #[new]
    fn new(n_qubits: usize, channels: Vec<(String, f64)>) -> PyResult<Self> {
        let parsed = channels.iter().map(|(p, r)| Ok((pauli(p)?, *r))).collect::<PyResult<Vec<_>>>()?;
        NoiseLayerModel::new(n_qubits, parsed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        NoiseLayerModel::load(&path).map(Self).map_err(err)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    fn channels(&self) -> Vec<(String, f64)> {
        self.0.channels().iter().map(|(p, r)| (p.to_string(), *r)).collect()
    }

    fn rate(&self, p: &str) -> PyResult<f64> {
        Ok(self.0.rate(&pauli(p)?))
    }

    fn pauli_fidelity(&self, observable: &str) -> PyResult<f64> {
        self.0.pauli_fidelity(&pauli(observable)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("NoiseModel({}, {:?})", self.0.n_qubits(), self.channels())
    }
}

#[pyclass(name = "Circuit", module = "pea", frozen)]
struct PyCircuit(CircuitSpec);

#[pymethods]
impl PyCircuit {
    /// ZZ chain at the Clifford point `J = π / (2 dt)`.
    #[staticmethod]
    fn clifford_zz(n_qubits: usize, dt: f64, steps: usize, noise: &PyNoiseModel) -> PyResult<Self> {
        build_ising_circuit(&IsingParams::clifford_zz(n_qubits, dt, steps), Arc::new(noise.0.clone()))
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n_qubits, j, h, dt, steps, noise, noise_on_single_qubit_layers = false))]
    fn tfim(
        n_qubits: usize,
        j: f64,
        h: f64,
        dt: f64,
        steps: usize,
        noise: &PyNoiseModel,
        noise_on_single_qubit_layers: bool,
    ) -> PyResult<Self> {
        let mut params = IsingParams::tfim(n_qubits, j, h, dt, steps);
        params.noise_on_single_qubit_layers = noise_on_single_qubit_layers;
        build_ising_circuit(&params, Arc::new(noise.0.clone())).map(Self).map_err(err)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.0.n_steps()
    }

    #[getter]
    fn n_layers(&self) -> usize {
        self.0.layers().len()
    }

    fn is_clifford(&self) -> bool {
        self.0.is_clifford()
    }

    fn truncated(&self, steps: usize) -> PyResult<Self> {
        self.0.truncated(steps).map(Self).map_err(err)
    }

    /// Exact `tr(O ρ_k)` after each step under `target`, from `|0…0>`.
    fn reference(&self, target: &PyNoiseModel, observable: &str) -> PyResult<Vec<f64>> {
        let rho = DensityMatrix::zero_state(self.0.n_qubits());
        evolve_channel_composition(&self.0, &target.0, &rho, &pauli(observable)?).map(|t| t.values()).map_err(err)
    }
}

#[pyclass(name = "Plan", module = "pea", frozen)]
struct PyPlan(AmplificationPlan);

#[pymethods]
impl PyPlan {
    #[new]
    fn new(hardware: &PyNoiseModel, target: &PyNoiseModel) -> PyResult<Self> {
        AmplificationPlan::new(&hardware.0, &target.0).map(Self).map_err(err)
    }

    /// `(pauli, case, lambda, lambda_target)` per channel.
    fn entries(&self) -> Vec<(String, String, f64, f64)> {
        self.0
            .entries()
            .iter()
            .map(|e| (e.pauli.to_string(), e.case.label().to_string(), e.hardware_rate, e.target_rate))
            .collect()
    }

    fn effective_model(&self, gain: f64) -> PyNoiseModel {
        PyNoiseModel(self.0.model_at(gain))
    }

    fn table(&self) -> String {
        self.0.table()
    }

    fn predict(&self, circuit: &PyCircuit, observable: &str, gain: f64) -> PyResult<f64> {
        predict_noisy_expectation(&circuit.0, &self.0, &pauli(observable)?, gain).map_err(err)
    }

    /// `(mean, stderr)` from `shots` Monte Carlo samples; releases the GIL.
    fn sample(
        &self,
        py: Python<'_>,
        circuit: &PyCircuit,
        observable: &str,
        gain: f64,
        shots: u64,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let obs = pauli(observable)?;
        let est = py
            .detach(|| sample_noisy_expectation(&circuit.0, &self.0, &obs, gain, shots, seed))
            .map_err(err)?;
        Ok((est.mean, est.stderr))
    }
}

#[pyfunction]
fn sample_probability(rate: f64) -> PyResult<f64> {
    pea_core::sample_probability(rate).map_err(err)
}

#[pyfunction]
fn lambert_w0(x: f64) -> PyResult<f64> {
    core_design::lambert_w0(x).map_err(err)
}

fn fidelity(k: f64, k_tilde: f64) -> PyResult<core_design::FidelityProduct> {
    core_design::FidelityProduct::new(k, k_tilde).map_err(err)
}

/// `(K, K~)` for an observable propagated through a Clifford circuit.
#[pyfunction]
fn fidelity_products(
    circuit: &PyCircuit,
    hardware: &PyNoiseModel,
    target: &PyNoiseModel,
    observable: &str,
) -> PyResult<(f64, f64)> {
    let fp = core_design::FidelityProduct::along_circuit(&circuit.0, &hardware.0, &target.0, &pauli(observable)?)
        .map_err(err)?;
    Ok((fp.k, fp.k_tilde))
}

#[pyfunction]
fn optimal_gains(k: f64, k_tilde: f64) -> PyResult<(f64, f64)> {
    core_design::optimal_gains(&fidelity(k, k_tilde)?).map_err(err)
}

#[pyfunction]
fn optimal_shots(gains: Vec<f64>, k: f64, k_tilde: f64, total: u64) -> PyResult<Vec<u64>> {
    core_design::optimal_shots(&gains, &fidelity(k, k_tilde)?, total).map(|p| p.shots).map_err(err)
}

#[pyfunction]
fn min_error_bound(k: f64, k_tilde: f64, total: u64) -> PyResult<f64> {
    core_design::min_error_bound(&fidelity(k, k_tilde)?, total).map_err(err)
}

#[pyfunction]
fn error_of_design(gains: Vec<f64>, shots: Vec<f64>, k: f64, k_tilde: f64) -> PyResult<f64> {
    core_design::error_of_design(&gains, &shots, &fidelity(k, k_tilde)?).map_err(err)
}

/// Fits `ln|F(G)| = a G + b` and returns the extrapolated `F(0)` with its error.
#[pyfunction]
#[pyo3(signature = (gains, means, stderrs, weighted = false))]
fn extrapolate_exponential<'py>(
    py: Python<'py>,
    gains: Vec<f64>,
    means: Vec<f64>,
    stderrs: Vec<f64>,
    weighted: bool,
) -> PyResult<Bound<'py, PyDict>> {
    if gains.len() != means.len() || gains.len() != stderrs.len() {
        return Err(PyValueError::new_err("gains, means and stderrs need equal lengths"));
    }
    let points = gains
        .iter()
        .zip(&means)
        .zip(&stderrs)
        .map(|((&gain, &mean), &stderr)| GainPoint { gain, mean, stderr, shots: 0 })
        .collect();
    let series = GainSeries::new(points).map_err(err)?;
    let fit = fit_log_linear_with(&series, &FitOptions { weighted, ..FitOptions::default() }).map_err(err)?;
    let ex = extrapolate(&fit);
    let out = PyDict::new(py);
    out.set_item("value", ex.value)?;
    out.set_item("error", ex.error)?;
    out.set_item("a", fit.a)?;
    out.set_item("b", fit.b)?;
    out.set_item("delta_b", fit.delta_b)?;
    Ok(out)
}

#[pymodule]
fn pea(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyNoiseModel>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(sample_probability, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w0, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_products, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_gains, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_shots, m)?)?;
    m.add_function(wrap_pyfunction!(min_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(error_of_design, m)?)?;
    m.add_function(wrap_pyfunction!(extrapolate_exponential, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
