//! Seeded experiment drivers.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, GainSpec};
use super::output::{fmt_f64, write_csv, write_json, ARTIFACT_VERSION};
use crate::amplification::{predict_noisy_expectation, sample_noisy_expectation, AmplificationPlan, PlanEntry, SampleEstimate};
use crate::circuit::{CircuitSpec, IsingKind};
use crate::design::{
    error_of_design, even_shots, min_error_bound, optimal_gains, optimal_shots, regular_pea_bound, FidelityProduct,
    ShotPlan,
};
use crate::error::{PeaError, Result};
use crate::extrapolation::{extrapolate, fit_log_linear_with, intercept_error, FitOptions, GainPoint, GainSeries};
use crate::noise::NoiseLayerModel;
use crate::oracle::{evolve_channel_composition, evolve_continuous_lindblad, LindbladSpec, MAX_ORACLE_QUBITS};
use crate::pauli::{propagate_observable, Pauli, PauliString};
use crate::state::DensityMatrix;

const ORDERING_NOTE: &str = "Pauli strings list qubit 0 first; basis index bit q is qubit q";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one sampling job, mixed from the master seed and job coordinates.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Runs `f` on a dedicated pool of `threads` workers, or the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PeaError::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    SignalLost,
    SignInconsistent,
}

impl FitStatus {
    pub fn label(self) -> &'static str {
        match self {
            FitStatus::Ok => "ok",
            FitStatus::SignalLost => "signal_lost",
            FitStatus::SignInconsistent => "sign_inconsistent",
        }
    }
}

/// One extrapolation from sampled points.
#[derive(Clone, Debug, Serialize)]
pub struct FitOutcome {
    pub status: FitStatus,
    pub value: Option<f64>,
    pub error: Option<f64>,
    pub delta_b: Option<f64>,
    /// OLS intercept error from the raw log errors, also for failed fits.
    pub delta_b_raw: Option<f64>,
}

fn fit_points(points: Vec<GainPoint>, options: &FitOptions) -> Result<FitOutcome> {
    let gains: Vec<f64> = points.iter().map(|p| p.gain).collect();
    let delta_b_raw = if points.iter().all(|p| p.mean != 0.0) {
        let dy: Vec<f64> = points.iter().map(|p| p.stderr / p.mean.abs()).collect();
        Some(intercept_error(&gains, &dy)?)
    } else {
        None
    };
    let series = GainSeries::new(points)?;
    let failed = |status| FitOutcome { status, value: None, error: None, delta_b: None, delta_b_raw };
    match fit_log_linear_with(&series, options) {
        Ok(fit) => {
            let ex = extrapolate(&fit);
            Ok(FitOutcome {
                status: FitStatus::Ok,
                value: Some(ex.value),
                error: Some(ex.error),
                delta_b: Some(fit.delta_b),
                delta_b_raw,
            })
        }
        Err(PeaError::SignalLost { .. }) => Ok(failed(FitStatus::SignalLost)),
        Err(PeaError::SignInconsistent) => Ok(failed(FitStatus::SignInconsistent)),
        Err(e) => Err(e),
    }
}

fn sample_points(
    circuit: &CircuitSpec,
    plan: &AmplificationPlan,
    observable: &PauliString,
    shots: &ShotPlan,
    seed_of: impl Fn(usize) -> u64,
) -> Result<(Vec<SampleEstimate>, Vec<GainPoint>)> {
    let mut estimates = Vec::with_capacity(shots.gains.len());
    let mut points = Vec::with_capacity(shots.gains.len());
    for (j, (&g, &s)) in shots.gains.iter().zip(&shots.shots).enumerate() {
        let est = sample_noisy_expectation(circuit, plan, observable, g, s, seed_of(j))?;
        points.push(GainPoint::from_estimate(g, &est));
        estimates.push(est);
    }
    Ok((estimates, points))
}

struct Setup {
    hardware: NoiseLayerModel,
    target: NoiseLayerModel,
    circuit: CircuitSpec,
    plan: AmplificationPlan,
    config_hash: String,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let hardware = cfg.hardware()?;
        let target = cfg.target()?;
        let circuit = cfg.build_circuit(&hardware)?;
        let plan = AmplificationPlan::new(&hardware, &target)?;
        Ok(Self { config_hash: cfg.config_hash()?, hardware, target, circuit, plan })
    }

    fn fidelity(&self, cfg: &ExperimentConfig) -> Result<FidelityProduct> {
        FidelityProduct::along_circuit(&self.circuit, &self.hardware, &self.target, &cfg.observable)
    }

    fn reference(&self, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
        let n = self.circuit.n_qubits();
        let trace = evolve_channel_composition(&self.circuit, &self.target, &DensityMatrix::zero_state(n), &cfg.observable)?;
        Ok(trace.values())
    }
}

fn require_kind(cfg: &ExperimentConfig, kind: IsingKind, what: &str) -> Result<()> {
    if cfg.circuit.kind != kind {
        return Err(PeaError::Config(format!("{what} experiment needs circuit.kind = {kind:?}")));
    }
    Ok(())
}

fn check_oracle_size(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.circuit.n_qubits > MAX_ORACLE_QUBITS {
        return Err(PeaError::Config(format!(
            "reference oracle supports at most {MAX_ORACLE_QUBITS} qubits, circuit has {}",
            cfg.circuit.n_qubits
        )));
    }
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

fn gain_columns(prefix: &[&str], n_gains: usize) -> Vec<String> {
    let mut h: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    for j in 0..n_gains {
        h.extend([format!("gain_{j}"), format!("shots_{j}"), format!("mean_{j}"), format!("stderr_{j}")]);
    }
    h
}

fn push_gain_values(row: &mut Vec<String>, shots: &ShotPlan, estimates: &[SampleEstimate]) {
    for ((g, s), e) in shots.gains.iter().zip(&shots.shots).zip(estimates) {
        row.extend([fmt_f64(Some(*g)), s.to_string(), fmt_f64(Some(e.mean)), fmt_f64(Some(e.stderr))]);
    }
}

fn write_reference(dir: &Path, reference: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> =
        reference.iter().enumerate().map(|(k, v)| vec![(k + 1).to_string(), fmt_f64(Some(*v))]).collect();
    write_csv(&dir.join("reference.csv"), &[], &["step".into(), "value".into()], &rows)
}

// ---------------------------------------------------------------- scaling

#[derive(Clone, Debug, Serialize)]
pub struct BudgetDesign {
    pub budget: u64,
    pub shots: ShotPlan,
    pub predicted_error: f64,
    pub bound: Option<f64>,
    pub regular_pea_bound: f64,
    pub standard_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub budget: u64,
    pub repetition: usize,
    pub fit: FitOutcome,
    pub estimates: Vec<SampleEstimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BudgetSummary {
    pub budget: u64,
    pub ok_fits: usize,
    pub mean_value: Option<f64>,
    pub mean_delta_b: Option<f64>,
    pub mean_delta_b_raw: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub artifact_version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub fidelity: FidelityProduct,
    pub kappa: f64,
    pub gains: Vec<f64>,
    pub plan: Vec<PlanEntry>,
    pub reference: f64,
    pub reference_trace: Vec<f64>,
    pub designs: Vec<BudgetDesign>,
    pub budgets: Vec<BudgetSummary>,
    /// Slope of `ln(mean Δb)` against `ln M`, from the raw intercept errors.
    pub delta_b_slope: Option<f64>,
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub rows: Vec<ScalingRow>,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn run_scaling_experiment(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    let start = Instant::now();
    require_kind(cfg, IsingKind::CliffordZz, "scaling")?;
    check_oracle_size(cfg)?;
    let setup = Setup::new(cfg)?;
    let fp = setup.fidelity(cfg)?;
    let gains = match &cfg.gains {
        GainSpec::Rule(_) => {
            let (g1, g2) = optimal_gains(&fp)?;
            vec![g1, g2]
        }
        GainSpec::List(g) => g.clone(),
    };
    let reference_trace = setup.reference(cfg)?;
    let reference = *reference_trace.last().expect("circuit has at least one step");

    let designs = cfg
        .budgets
        .iter()
        .map(|&m| {
            let shots = optimal_shots(&gains, &fp, m)?;
            Ok(BudgetDesign {
                budget: m,
                predicted_error: error_of_design(&gains, &shots.ideal_shots, &fp)?,
                shots,
                bound: min_error_bound(&fp, m).ok(),
                regular_pea_bound: regular_pea_bound(fp.k, m)?,
                standard_error: 1.0 / (m as f64).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let options = FitOptions { weighted: cfg.weighted_fit, ..FitOptions::default() };
    let jobs: Vec<(usize, usize)> =
        (0..designs.len()).flat_map(|b| (0..cfg.repetitions).map(move |r| (b, r))).collect();
    let rows = with_threads(cfg.threads, || {
        jobs.par_iter()
            .map(|&(b, rep)| {
                let d = &designs[b];
                let seed_of = |j: usize| derive_seed(cfg.seed, &[d.budget, rep as u64, j as u64, 0]);
                let (estimates, points) = sample_points(&setup.circuit, &setup.plan, &cfg.observable, &d.shots, seed_of)?;
                Ok(ScalingRow { budget: d.budget, repetition: rep, fit: fit_points(points, &options)?, estimates })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let budgets: Vec<BudgetSummary> = designs
        .iter()
        .map(|d| {
            let rs: Vec<&ScalingRow> = rows.iter().filter(|r| r.budget == d.budget).collect();
            BudgetSummary {
                budget: d.budget,
                ok_fits: rs.iter().filter(|r| r.fit.status == FitStatus::Ok).count(),
                mean_value: mean_of(rs.iter().filter_map(|r| r.fit.value)),
                mean_delta_b: mean_of(rs.iter().filter_map(|r| r.fit.delta_b)),
                mean_delta_b_raw: mean_of(rs.iter().filter_map(|r| r.fit.delta_b_raw)),
            }
        })
        .collect();
    let (ms, dbs): (Vec<f64>, Vec<f64>) =
        budgets.iter().filter_map(|b| b.mean_delta_b_raw.map(|v| (b.budget as f64, v))).unzip();

    Ok(ScalingReport {
        artifact_version: ARTIFACT_VERSION,
        config_hash: setup.config_hash,
        seed: cfg.seed,
        kappa: fp.kappa(),
        fidelity: fp,
        gains,
        plan: setup.plan.entries().to_vec(),
        reference,
        reference_trace,
        delta_b_slope: log_log_slope(&ms, &dbs),
        designs,
        budgets,
        runtime_seconds: start.elapsed().as_secs_f64(),
        rows,
    })
}

impl ScalingReport {
    pub fn csv_header(&self) -> Vec<String> {
        gain_columns(
            &[
                "artifact_version",
                "config_hash",
                "seed",
                "budget",
                "repetition",
                "status",
                "f0",
                "f0_error",
                "delta_b",
                "delta_b_raw",
                "bound",
                "regular_pea_bound",
                "standard_error",
                "reference",
            ],
            self.gains.len(),
        )
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let d = self.designs.iter().find(|d| d.budget == r.budget).expect("row budget has a design");
                let mut row = vec![
                    self.artifact_version.to_string(),
                    self.config_hash.clone(),
                    self.seed.to_string(),
                    r.budget.to_string(),
                    r.repetition.to_string(),
                    r.fit.status.label().to_string(),
                    fmt_f64(r.fit.value),
                    fmt_f64(r.fit.error),
                    fmt_f64(r.fit.delta_b),
                    fmt_f64(r.fit.delta_b_raw),
                    fmt_f64(d.bound),
                    fmt_f64(Some(d.regular_pea_bound)),
                    fmt_f64(Some(d.standard_error)),
                    fmt_f64(Some(self.reference)),
                ];
                push_gain_values(&mut row, &d.shots, &r.estimates);
                row
            })
            .collect()
    }

    /// Writes `scaling.csv`, `reference.csv` and `scaling_summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join("scaling.csv"), &[ORDERING_NOTE.into()], &self.csv_header(), &self.csv_rows())?;
        write_reference(dir, &self.reference_trace)?;
        write_json(&dir.join("scaling_summary.json"), self)
    }
}

// ------------------------------------------------------------------- tfim

#[derive(Clone, Debug, Serialize)]
pub struct TfimRow {
    pub budget: u64,
    pub repetition: usize,
    pub step: usize,
    pub fit: FitOutcome,
    pub estimates: Vec<SampleEstimate>,
    pub reference: f64,
    /// Continuous master-equation value at the same time, for comparison only.
    pub lindblad: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TfimReport {
    pub artifact_version: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub gains: Vec<f64>,
    pub plan: Vec<PlanEntry>,
    pub reference: Vec<f64>,
    pub lindblad: Vec<f64>,
    pub shot_plans: Vec<ShotPlan>,
    pub runtime_seconds: f64,
    #[serde(skip)]
    pub rows: Vec<TfimRow>,
}

/// `H = -J Σ Z_i Z_{i+1} - h Σ X_i`, matching the circuit's rotation angles.
fn tfim_hamiltonian(n: usize, j: f64, h: f64) -> Result<Vec<(f64, PauliString)>> {
    let mut terms = Vec::new();
    for a in 0..n - 1 {
        terms.push((-j, PauliString::from_sparse(n, &[(a, Pauli::Z), (a + 1, Pauli::Z)])?));
    }
    if h != 0.0 {
        for q in 0..n {
            terms.push((-h, PauliString::single(n, q, Pauli::X)?));
        }
    }
    Ok(terms)
}

fn lindblad_diagnostic(cfg: &ExperimentConfig, setup: &Setup) -> Result<Vec<f64>> {
    let params = cfg.circuit.params()?;
    let n = params.n_qubits;
    let per_step = setup.circuit.layers()[..setup.circuit.step_ends()[0]].iter().filter(|l| l.is_noisy()).count();
    let jumps = LindbladSpec::jumps_from_layer_model(&setup.target, params.dt)?
        .into_iter()
        .map(|(p, g)| (p, g * per_step as f64))
        .collect();
    let spec = LindbladSpec { n_qubits: n, hamiltonian: tfim_hamiltonian(n, params.coupling, params.field)?, jumps };
    let t_final = params.dt * params.steps as f64;
    let dt_int = (params.dt / 20.0).min(0.01);
    let trace = evolve_continuous_lindblad(&spec, &DensityMatrix::zero_state(n), &cfg.observable, t_final, dt_int, params.steps)?;
    Ok(trace.values())
}

pub fn run_tfim_experiment(cfg: &ExperimentConfig) -> Result<TfimReport> {
    let start = Instant::now();
    require_kind(cfg, IsingKind::Tfim, "tfim")?;
    check_oracle_size(cfg)?;
    let gains = match &cfg.gains {
        GainSpec::List(g) => g.clone(),
        GainSpec::Rule(_) => {
            return Err(PeaError::Config("tfim circuits are not Clifford; list the gains explicitly".into()));
        }
    };
    let setup = Setup::new(cfg)?;
    let reference = setup.reference(cfg)?;
    let lindblad = lindblad_diagnostic(cfg, &setup)?;
    let steps = setup.circuit.n_steps();
    let truncated: Vec<CircuitSpec> = (1..=steps).map(|k| setup.circuit.truncated(k)).collect::<Result<_>>()?;
    let shot_plans: Vec<ShotPlan> = cfg.budgets.iter().map(|&m| even_shots(&gains, m)).collect::<Result<_>>()?;

    let options = FitOptions { weighted: cfg.weighted_fit, ..FitOptions::default() };
    let mut jobs = Vec::new();
    for b in 0..shot_plans.len() {
        for rep in 0..cfg.repetitions {
            for step in 1..=steps {
                jobs.push((b, rep, step));
            }
        }
    }
    let rows = with_threads(cfg.threads, || {
        jobs.par_iter()
            .map(|&(b, rep, step)| {
                let shots = &shot_plans[b];
                let budget = cfg.budgets[b];
                let seed_of = |j: usize| derive_seed(cfg.seed, &[budget, rep as u64, j as u64, step as u64]);
                let (estimates, points) =
                    sample_points(&truncated[step - 1], &setup.plan, &cfg.observable, shots, seed_of)?;
                Ok(TfimRow {
                    budget,
                    repetition: rep,
                    step,
                    fit: fit_points(points, &options)?,
                    estimates,
                    reference: reference[step - 1],
                    lindblad: lindblad[step - 1],
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    Ok(TfimReport {
        artifact_version: ARTIFACT_VERSION,
        config_hash: setup.config_hash,
        seed: cfg.seed,
        gains,
        plan: setup.plan.entries().to_vec(),
        reference,
        lindblad,
        shot_plans,
        runtime_seconds: start.elapsed().as_secs_f64(),
        rows,
    })
}

impl TfimReport {
    pub fn csv_header(&self) -> Vec<String> {
        gain_columns(
            &[
                "artifact_version",
                "config_hash",
                "seed",
                "budget",
                "repetition",
                "step",
                "status",
                "value",
                "error",
                "reference",
                "lindblad",
            ],
            self.gains.len(),
        )
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let b = self.shot_plans.iter().position(|p| p.total == r.budget).expect("row budget has a plan");
                let mut row = vec![
                    self.artifact_version.to_string(),
                    self.config_hash.clone(),
                    self.seed.to_string(),
                    r.budget.to_string(),
                    r.repetition.to_string(),
                    r.step.to_string(),
                    r.fit.status.label().to_string(),
                    fmt_f64(r.fit.value),
                    fmt_f64(r.fit.error),
                    fmt_f64(Some(r.reference)),
                    fmt_f64(Some(r.lindblad)),
                ];
                push_gain_values(&mut row, &self.shot_plans[b], &r.estimates);
                row
            })
            .collect()
    }

    /// Writes `tfim.csv`, `reference.csv` and `tfim_summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_csv(&dir.join("tfim.csv"), &[ORDERING_NOTE.into()], &self.csv_header(), &self.csv_rows())?;
        write_reference(dir, &self.reference)?;
        write_json(&dir.join("tfim_summary.json"), self)
    }
}

// ---------------------------------------------------------------- predict

#[derive(Clone, Debug, Serialize)]
pub struct PropagatedLayer {
    pub layer: usize,
    pub noisy: bool,
    pub observable: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct PredictReport {
    pub artifact_version: &'static str,
    pub config_hash: String,
    pub observable: String,
    pub layers: Vec<PropagatedLayer>,
    pub plan: Vec<PlanEntry>,
    pub k: f64,
    pub k_tilde: f64,
    pub kappa: f64,
    pub ideal: f64,
    /// Closed-form noisy value at `G = 1`.
    pub at_hardware: f64,
    /// Closed-form value at `G = 0`.
    pub at_target: f64,
}

pub fn run_predict(cfg: &ExperimentConfig) -> Result<PredictReport> {
    let setup = Setup::new(cfg)?;
    let clifford = setup.circuit.clifford_layers().map_err(|e| match e {
        PeaError::NotClifford(m) => PeaError::NotClifford(format!(
            "{m}; closed-form prediction needs a Clifford circuit (use circuit.kind = \"clifford_zz\")"
        )),
        other => other,
    })?;
    let seen = propagate_observable(&clifford, &cfg.observable)?;
    let layers = setup
        .circuit
        .layers()
        .iter()
        .zip(&seen)
        .enumerate()
        .map(|(l, (layer, p))| PropagatedLayer { layer: l, noisy: layer.is_noisy(), observable: p.to_string() })
        .collect();
    let fp = setup.fidelity(cfg)?;
    let keep = AmplificationPlan::keep(&NoiseLayerModel::empty(cfg.circuit.n_qubits));
    Ok(PredictReport {
        artifact_version: ARTIFACT_VERSION,
        config_hash: setup.config_hash,
        observable: cfg.observable.to_string(),
        layers,
        plan: setup.plan.entries().to_vec(),
        k: fp.k,
        k_tilde: fp.k_tilde,
        kappa: fp.kappa(),
        ideal: predict_noisy_expectation(&setup.circuit, &keep, &cfg.observable, 1.0)?,
        at_hardware: predict_noisy_expectation(&setup.circuit, &setup.plan, &cfg.observable, 1.0)?,
        at_target: predict_noisy_expectation(&setup.circuit, &setup.plan, &cfg.observable, 0.0)?,
    })
}

impl fmt::Display for PredictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "observable {}", self.observable)?;
        writeln!(f, "layer  noisy  observable seen by layer")?;
        for l in &self.layers {
            writeln!(f, "{:>5}  {:<5}  {}", l.layer, if l.noisy { "yes" } else { "no" }, l.observable)?;
        }
        writeln!(f, "\n{:<8} {:<9} {:>10} {:>10}", "pauli", "case", "lambda", "lambda~")?;
        for e in &self.plan {
            writeln!(f, "{:<8} {:<9} {:>10} {:>10}", e.pauli.to_string(), e.case.label(), e.hardware_rate, e.target_rate)?;
        }
        writeln!(f)?;
        writeln!(f, "K      = {:.12} (ln {:.6})", self.k, self.k.ln())?;
        writeln!(f, "K~     = {:.12} (ln {:.6})", self.k_tilde, self.k_tilde.ln())?;
        writeln!(f, "kappa  = {:.12}", self.kappa)?;
        writeln!(f, "ideal  = {:.12}", self.ideal)?;
        writeln!(f, "G = 1  : {:.12}", self.at_hardware)?;
        write!(f, "G = 0  : {:.12}", self.at_target)
    }
}

// ----------------------------------------------------------------- design

#[derive(Clone, Debug, Serialize)]
pub struct DesignReport {
    pub artifact_version: &'static str,
    pub config_hash: String,
    pub fidelity: FidelityProduct,
    pub kappa: f64,
    pub gains: Vec<f64>,
    pub designs: Vec<BudgetDesign>,
}

pub fn run_design(cfg: &ExperimentConfig) -> Result<DesignReport> {
    let setup = Setup::new(cfg)?;
    let fp = setup.fidelity(cfg)?;
    let gains = match &cfg.gains {
        GainSpec::Rule(_) => {
            let (g1, g2) = optimal_gains(&fp)?;
            vec![g1, g2]
        }
        GainSpec::List(g) => g.clone(),
    };
    let designs = cfg
        .budgets
        .iter()
        .map(|&m| {
            let shots = optimal_shots(&gains, &fp, m)?;
            Ok(BudgetDesign {
                budget: m,
                predicted_error: error_of_design(&gains, &shots.ideal_shots, &fp)?,
                shots,
                bound: min_error_bound(&fp, m).ok(),
                regular_pea_bound: regular_pea_bound(fp.k, m)?,
                standard_error: 1.0 / (m as f64).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignReport {
        artifact_version: ARTIFACT_VERSION,
        config_hash: setup.config_hash,
        kappa: fp.kappa(),
        fidelity: fp,
        gains,
        designs,
    })
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "K = {:.12}  K~ = {:.12}  kappa = {:.12}", self.fidelity.k, self.fidelity.k_tilde, self.kappa)?;
        let g: Vec<String> = self.gains.iter().map(|g| format!("{g:.10}")).collect();
        writeln!(f, "gains: {}", g.join(", "))?;
        writeln!(f, "{:>10}  {:<24}  {:>12}  {:>12}  {:>12}", "budget", "shots", "error", "bound", "regular")?;
        for d in &self.designs {
            let shots: Vec<String> = d.shots.shots.iter().map(|s| s.to_string()).collect();
            writeln!(
                f,
                "{:>10}  {:<24}  {:>12.6e}  {:>12}  {:>12.6e}",
                d.budget,
                shots.join("/"),
                d.predicted_error,
                d.bound.map(|b| format!("{b:.6e}")).unwrap_or_else(|| "-".into()),
                d.regular_pea_bound
            )?;
        }
        Ok(())
    }
}

/// Runs the configured experiment and writes its files under `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<String> {
    match cfg.experiment {
        ExperimentKind::Scaling => {
            let report = run_scaling_experiment(cfg)?;
            report.write(out)?;
            Ok(format!(
                "scaling: {} rows, reference {:.6}, delta_b slope {}\nwrote {}",
                report.rows.len(),
                report.reference,
                report.delta_b_slope.map(|s| format!("{s:.4}")).unwrap_or_else(|| "n/a".into()),
                out.join("scaling.csv").display()
            ))
        }
        ExperimentKind::Tfim => {
            let report = run_tfim_experiment(cfg)?;
            report.write(out)?;
            Ok(format!("tfim: {} rows\nwrote {}", report.rows.len(), out.join("tfim.csv").display()))
        }
        ExperimentKind::Predict => {
            let report = run_predict(cfg)?;
            std::fs::create_dir_all(out)?;
            write_json(&out.join("predict.json"), &report)?;
            Ok(report.to_string())
        }
        ExperimentKind::Design => {
            let report = run_design(cfg)?;
            std::fs::create_dir_all(out)?;
            write_json(&out.join("design.json"), &report)?;
            Ok(report.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = derive_seed(1, &[100, 0, 0, 0]);
        assert_eq!(a, derive_seed(1, &[100, 0, 0, 0]));
        let others = [
            derive_seed(2, &[100, 0, 0, 0]),
            derive_seed(1, &[1000, 0, 0, 0]),
            derive_seed(1, &[100, 1, 0, 0]),
            derive_seed(1, &[100, 0, 1, 0]),
            derive_seed(1, &[100, 0, 0, 1]),
        ];
        assert!(others.iter().all(|&s| s != a));
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1e2, 1e3, 1e4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_none());
        assert!(log_log_slope(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn failed_fits_keep_raw_error() {
        let pts = vec![
            GainPoint { gain: 1.0, mean: 0.01, stderr: 0.1, shots: 10 },
            GainPoint { gain: 2.0, mean: 0.2, stderr: 0.01, shots: 10 },
        ];
        let out = fit_points(pts, &FitOptions::default()).unwrap();
        assert_eq!(out.status, FitStatus::SignalLost);
        assert!(out.value.is_none());
        assert!(out.delta_b_raw.unwrap() > 0.0);
    }
}
