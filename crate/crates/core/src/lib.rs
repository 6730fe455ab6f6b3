//! Partial probabilistic error amplification: sparse Pauli-Lindblad noise,
//! case-wise gain schedules, sampled and closed-form noisy expectations,
//! exponential extrapolation to a target noise model and shot/gain design.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod amplification;
pub mod circuit;
pub mod design;
pub mod error;
pub mod extrapolation;
pub mod harness;
pub mod noise;
pub mod oracle;
pub mod pauli;
pub mod state;

pub use amplification::{
    effective_rate, predict_noisy_expectation, sample_noisy_expectation, AmplificationCase, AmplificationPlan,
    PlanEntry, SampleEstimate,
};
pub use circuit::{build_ising_circuit, CircuitSpec, Gate, IsingKind, IsingParams, Layer};
pub use design::{
    error_of_design, lambert_w0, min_error_bound, optimal_gains, optimal_shots, regular_pea_bound,
    FidelityProduct, ShotPlan,
};
pub use error::{PeaError, Result};
pub use extrapolation::{
    extrapolate, fit_log_linear, fit_log_linear_with, intercept_error, ExtrapolationResult, FitOptions, FitResult,
    GainPoint, GainSeries,
};
pub use noise::{sample_probability, NoiseLayerModel};
pub use oracle::{evolve_channel_composition, evolve_continuous_lindblad, LindbladSpec, ReferenceTrace};
pub use pauli::{conjugate, propagate_observable, CliffordGate, Pauli, PauliString};
pub use state::{DensityMatrix, StateVector};
